//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs as `cargo test -p poirec-core --test acceptance`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Cursor;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use poirec_core::aspects::AspectCategory;
use poirec_core::config::RunConfig;
use poirec_core::corpus::{ingest_reader, preprocess, Corpus, IngestOptions, TokenSeq, WordList};
use poirec_core::evaluate::{
    explanation_fidelity, levenshtein, popularity_orders, precision_recall_at_n, run_benchmark, BenchmarkReport, Model,
};
use poirec_core::explain::{
    extract_bipartite_cores, hits, pagerank, shingle_finder, similarity_score, ExplainMethod, ExplanationGraph,
    NodeKind, ShingleConfig,
};
use poirec_core::fm::{fm_gradient_check, FmModel, SparseVec};
use poirec_core::pipeline::{train_all, Lexicons, Trained};
use poirec_core::synthetic::{desk_config, generate, SyntheticConfig};
use poirec_core::textcnn::{gradient_check, train, training_accuracy, CnnConfig, CnnModel, TrainConfig, Vocab};

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

fn random_fm(rng: &mut ChaCha8Rng, n: usize, k: usize) -> FmModel {
    let mut m = FmModel::zeros(n, k);
    m.w0 = rng.random_range(-1.0..1.0);
    m.w.iter_mut().for_each(|w| *w = rng.random_range(-1.0..1.0));
    m.v.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
    m
}

fn random_input(rng: &mut ChaCha8Rng, n: usize) -> SparseVec {
    let x: Vec<f64> = (0..n)
        .map(|_| if rng.random_bool(0.4) { rng.random_range(-2.0..2.0) } else { 0.0 })
        .collect();
    SparseVec::from_dense(&x)
}

/// The pairwise double sum over every feature pair.
fn fm_naive(m: &FmModel, x: &[f64]) -> f64 {
    let mut y = m.w0;
    for i in 0..m.n {
        y += m.w[i] * x[i];
        for j in i + 1..m.n {
            let dot: f64 = (0..m.k).map(|f| m.v[i * m.k + f] * m.v[j * m.k + f]).sum();
            y += dot * x[i] * x[j];
        }
    }
    y
}

fn fm_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..=50);
        let k = rng.random_range(1..=8);
        let m = random_fm(&mut rng, n, k);
        let x = random_input(&mut rng, n);
        let fast = m.predict(&x).expect("matching dimension");
        worst = worst.max((fast - fm_naive(&m, &x.to_dense())).abs());
    }
    let took = start.elapsed();
    outcome(
        worst < 1e-9 && took < Duration::from_secs(5),
        format!("max |delta| {worst:.2e} over 1000 instances in {took:.2?}"),
    )
}

fn fm_gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(2..=20);
        let k = rng.random_range(1..=8);
        let mut m = random_fm(&mut rng, n, k);
        m.v.iter_mut().for_each(|v| *v *= 0.5);
        let x = random_input(&mut rng, n);
        let y = f64::from(u8::from(rng.random_bool(0.5)));
        worst = worst.max(fm_gradient_check(&m, &x, y, 0.01, 1e-4));
    }
    outcome(worst < 1e-4, format!("max relative error {worst:.2e} over 100 rows"))
}

fn tokens(words: &[&str], max_len: usize) -> TokenSeq {
    preprocess(words, &WordList::default(), "<pad>", max_len)
}

const FILLER: [&str; 12] = [
    "room", "bed", "view", "pool", "desk", "lamp", "door", "wall", "floor", "chair", "table", "window",
];

fn cnn_gradients() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let arch = CnnConfig {
        dim: 4,
        filters: 2,
        widths: vec![2, 3],
        k_max: 1,
        dropout: 0.0,
        max_len: 8,
    };
    let vocab = Vocab::build([&tokens(&FILLER, 12)], "<pad>");
    let (mut worst, mut checked, mut kinks) = (0.0f64, 0, 0);
    for seed in 0..50 {
        let mut m = CnnModel::new(AspectCategory::Food, vocab.clone(), &arch, seed).expect("valid architecture");
        for f in &mut m.filters {
            f.bias = rng.random_range(-0.3..0.5);
        }
        m.dense_b = [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
        let len = rng.random_range(3..=8);
        let words: Vec<&str> = (0..len).map(|_| *FILLER.choose(&mut rng).expect("non-empty")).collect();
        let r = gradient_check(&m, &tokens(&words, 8), rng.random_bool(0.5), 1e-5);
        worst = worst.max(r.max_rel_error);
        checked += r.checked;
        kinks += r.kinks;
    }
    let took = start.elapsed();
    outcome(
        worst < 1e-3 && checked > 0 && took < Duration::from_secs(30),
        format!("max relative error {worst:.2e}, {checked} coordinates checked, {kinks} kinks skipped, {took:.2?}"),
    )
}

fn cnn_sanity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut data = Vec::new();
    for i in 0..200 {
        let mut words: Vec<&str> = (0..5).map(|_| *FILLER.choose(&mut rng).expect("non-empty")).collect();
        let positive = i % 2 == 0;
        if positive {
            words.insert(rng.random_range(0..=5), "sushi");
        }
        data.push((tokens(&words, 8), positive));
    }
    let arch = CnnConfig {
        dim: 8,
        filters: 4,
        widths: vec![2, 3],
        k_max: 1,
        dropout: 0.0,
        max_len: 8,
    };
    let cfg = TrainConfig {
        epochs: 50,
        batch: 8,
        lr: 0.3,
        seed: 11,
    };
    let run = || {
        let vocab = Vocab::build(data.iter().map(|(s, _)| s), "<pad>");
        let fresh = CnnModel::new(AspectCategory::Food, vocab, &arch, 5).expect("valid architecture");
        train(fresh, &data, &cfg).expect("two classes")
    };
    let (a, b) = (run(), run());
    let encoded: Vec<_> = data.iter().map(|(s, y)| (a.encode(s), *y)).collect();
    let acc = training_accuracy(&a, &encoded);
    let same = a.to_json().ok() == b.to_json().ok();
    outcome(
        acc == 1.0 && same,
        format!("training accuracy {:.1}% after 50 epochs, identical reruns: {same}", acc * 100.0),
    )
}

/// Random connected category-to-place graph with integer weights.
fn random_bipartite(rng: &mut ChaCha8Rng) -> ExplanationGraph {
    loop {
        let cats = rng.random_range(1..=4);
        let places = rng.random_range(2..=6);
        let mut edges = Vec::new();
        for c in 0..cats {
            for p in 0..places {
                if rng.random_bool(0.5) {
                    edges.push((c, p, f64::from(rng.random_range(1u8..=5))));
                }
            }
        }
        // union-find over categories 0..cats and places cats..cats+places
        let mut parent: Vec<usize> = (0..cats + places).collect();
        fn root(p: &mut [usize], i: usize) -> usize {
            if p[i] == i {
                i
            } else {
                let r = root(p, p[i]);
                p[i] = r;
                r
            }
        }
        for &(c, p, _) in &edges {
            let (a, b) = (root(&mut parent, c), root(&mut parent, cats + p));
            parent[a] = b;
        }
        let r0 = root(&mut parent, 0);
        if (0..cats + places).any(|i| root(&mut parent, i) != r0) {
            continue;
        }
        let mut g = ExplanationGraph::new();
        for &(c, p, w) in &edges {
            let ci = g.add_node(NodeKind::Category(AspectCategory::ALL[c]));
            let pi = g.add_node(NodeKind::Place(format!("P{p}")));
            g.add_edge(ci, pi, w);
        }
        return g;
    }
}

/// Principal eigenvector of AᵀA by dense power iteration.
fn authority_oracle(g: &ExplanationGraph) -> Vec<f64> {
    let n = g.len();
    let mut a = vec![vec![0.0; n]; n];
    for (s, d, w) in g.edges() {
        a[s][d] = w;
    }
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = (0..n).map(|r| a[r][i] * a[r][j]).sum();
        }
    }
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..100_000 {
        let mut next: Vec<f64> = (0..n).map(|i| (0..n).map(|j| m[i][j] * v[j]).sum()).collect();
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        next.iter_mut().for_each(|x| *x /= norm);
        let delta = next.iter().zip(&v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        v = next;
        if delta < 1e-15 {
            break;
        }
    }
    v
}

fn star(edges: &[(AspectCategory, &str, f64)]) -> ExplanationGraph {
    let mut g = ExplanationGraph::new();
    for &(c, p, w) in edges {
        let ci = g.add_node(NodeKind::Category(c));
        let pi = g.add_node(NodeKind::Place(p.to_string()));
        g.add_edge(ci, pi, w);
    }
    g
}

fn hits_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..25 {
        let g = random_bipartite(&mut rng);
        let s = hits(&g, 1e-14, 100_000);
        let oracle = authority_oracle(&g);
        let sign = if s.authority.iter().zip(&oracle).map(|(a, b)| a * b).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        let d = s.authority.iter().zip(&oracle).map(|(a, b)| (a - sign * b).abs()).fold(0.0, f64::max);
        worst = worst.max(d);
    }
    let k12 = star(&[(AspectCategory::Food, "P1", 1.0), (AspectCategory::Food, "P2", 1.0)]);
    let s = hits(&k12, 1e-8, 100);
    let r = 1.0 / 2f64.sqrt();
    let k12_err = [
        (s.authority[1] - r).abs(),
        (s.authority[2] - r).abs(),
        (s.hub[0] - 1.0).abs(),
        s.authority[0].abs(),
        s.hub[1].abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    outcome(
        worst < 1e-6 && k12_err < 1e-12,
        format!("max deviation {worst:.2e} on 25 graphs, K(1,2) error {k12_err:.1e}"),
    )
}

fn edge_set(g: &ExplanationGraph) -> BTreeSet<(String, String)> {
    g.edges().map(|(s, d, _)| (g.node(s).id().to_string(), g.node(d).id().to_string())).collect()
}

/// Edges covered by each core exactly once, and every active category peeled.
fn peels_cleanly(g: &ExplanationGraph) -> bool {
    let cores = extract_bipartite_cores(g);
    let mut covered = Vec::new();
    for c in &cores {
        covered.extend(c.places.iter().map(|(p, _)| (c.category.name().to_string(), p.clone())));
    }
    let unique: BTreeSet<_> = covered.iter().cloned().collect();
    let mut seq: Vec<AspectCategory> = cores.iter().map(|c| c.category).collect();
    seq.sort();
    let mut active: Vec<AspectCategory> =
        g.categories().filter(|(i, _)| g.out_edges(*i).next().is_some()).map(|(_, c)| c).collect();
    active.sort();
    unique.len() == covered.len() && unique == edge_set(g) && seq == active
}

fn core_peeling() -> Outcome {
    use AspectCategory::*;
    let fig = star(&[
        (Food, "P1", 3.0),
        (Food, "P2", 2.0),
        (Food, "P3", 2.0),
        (Price, "P3", 1.0),
        (Price, "P4", 1.0),
        (Service, "P4", 1.0),
    ]);
    let cores = extract_bipartite_cores(&fig);
    let primary: BTreeSet<&str> = cores[0].places.iter().map(|(p, _)| p.as_str()).collect();
    let primary_ok = cores[0].category == Food && primary == BTreeSet::from(["P1", "P2", "P3"]);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let random_ok = (0..100).all(|_| peels_cleanly(&random_bipartite(&mut rng)));
    outcome(
        primary_ok && peels_cleanly(&fig) && random_ok,
        format!(
            "primary core {:?} -> {:?}; peeling partitions edges on 100 random graphs: {random_ok}",
            cores[0].category, primary
        ),
    )
}

fn random_digraph(rng: &mut ChaCha8Rng, scale: f64) -> (ExplanationGraph, ExplanationGraph) {
    let n = rng.random_range(2..=10);
    let mut a = ExplanationGraph::new();
    let mut b = ExplanationGraph::new();
    for i in 0..n {
        let node = if i < 3 { NodeKind::Category(AspectCategory::ALL[i]) } else { NodeKind::Place(format!("P{i}")) };
        a.add_node(node.clone());
        b.add_node(node);
    }
    for s in 0..n {
        for d in 0..n {
            if s != d && rng.random_bool(0.3) {
                let w = rng.random_range(0.1..5.0);
                a.add_edge(s, d, w);
                b.add_edge(s, d, w * scale);
            }
        }
    }
    (a, b)
}

fn pagerank_props() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut sum_err, mut scale_err) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let (g, scaled) = random_digraph(&mut rng, 7.3);
        let p = pagerank(&g, 0.85, 1e-8, 100);
        let q = pagerank(&scaled, 0.85, 1e-8, 100);
        sum_err = sum_err.max((p.ranks.iter().sum::<f64>() - 1.0).abs());
        scale_err = scale_err.max(p.ranks.iter().zip(&q.ranks).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
    }
    let mut cycle = ExplanationGraph::new();
    let ids: Vec<usize> = (0..3).map(|i| cycle.add_node(NodeKind::Place(format!("P{i}")))).collect();
    for i in 0..3 {
        cycle.add_edge(ids[i], ids[(i + 1) % 3], 1.0);
    }
    let c = pagerank(&cycle, 0.85, 1e-8, 100);
    let cycle_err = c.ranks.iter().map(|r| (r - 1.0 / 3.0).abs()).fold(0.0, f64::max);
    outcome(
        sum_err < 1e-9 && cycle_err < 1e-9 && scale_err < 1e-12,
        format!("sum error {sum_err:.1e}, 3-cycle error {cycle_err:.1e}, scaling error {scale_err:.1e}"),
    )
}

fn shingle_recovery() -> Outcome {
    use AspectCategory::*;
    let groups = [[Food, Price, Service], [Pet, Amenities, Accessibility]];
    let mut g = ExplanationGraph::new();
    let cats: Vec<usize> = groups.iter().flatten().map(|c| g.add_node(NodeKind::Category(*c))).collect();
    let mut planted = BTreeMap::new();
    for p in 0..8 {
        let id = format!("P{}", p + 1);
        let pi = g.add_node(NodeKind::Place(id.clone()));
        let triple = groups[p / 4];
        for c in triple {
            let ci = g.find(&NodeKind::Category(c)).expect("category node");
            g.add_edge(pi, ci, 1.0);
        }
        planted.insert(id, (pi, BTreeSet::from(triple)));
    }
    let cfg = ShingleConfig {
        size: 3,
        permutations: 10,
        keep: 5,
        seed: 7,
    };
    let found = shingle_finder(&g, &cfg);
    let mut all_ok = true;
    for (id, (pi, triple)) in &planted {
        let Some(top) = found.places.get(id).and_then(|s| s.first()) else {
            all_ok = false;
            continue;
        };
        let got: BTreeSet<AspectCategory> = top.categories.iter().copied().collect();
        // exhaustive search over every 3-subset of the six categories
        let mut best = (f64::NEG_INFINITY, BTreeSet::new());
        for i in 0..6 {
            for j in i + 1..6 {
                for k in j + 1..6 {
                    let set = [cats[i], cats[j], cats[k]];
                    let s = similarity_score(&[*pi], &set, &g);
                    if s > best.0 {
                        let names = set.iter().map(|&n| match g.node(n) {
                            NodeKind::Category(c) => *c,
                            _ => unreachable!("category index"),
                        });
                        best = (s, names.collect());
                    }
                }
            }
        }
        all_ok &= &got == triple && &best.1 == triple && (best.0 - top.score).abs() < 1e-12;
    }
    outcome(all_ok, "top shingle of every place equals its planted triple and the exhaustive optimum")
}

/// Full-matrix edit distance.
fn wagner_fischer(a: &[u8], b: &[u8]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

fn metrics() -> Outcome {
    let set = |items: &[&str]| items.iter().map(|s| s.to_string()).collect::<BTreeSet<String>>();
    let m1 = precision_recall_at_n(&["a", "b", "c"], &set(&["a", "c", "d"]), 3).expect("relevant items");
    let m2 = precision_recall_at_n(&["a", "b", "c"], &set(&["x", "y"]), 3).expect("relevant items");
    let m3 = precision_recall_at_n(&["a", "b", "c"], &set(&["a", "b", "c"]), 3).expect("relevant items");
    let hand = (m1.precision, m1.recall, m1.f_score) == (2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0)
        && (m2.precision, m2.recall, m2.f_score) == (0.0, 0.0, 0.0)
        && (m3.precision, m3.recall, m3.f_score) == (1.0, 1.0, 1.0)
        && levenshtein(&["k", "i", "t", "t", "e", "n"], &["s", "i", "t", "t", "i", "n", "g"]) == 3;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let seq = |rng: &mut ChaCha8Rng| -> Vec<u8> { (0..rng.random_range(0..=12)).map(|_| rng.random_range(0..7)).collect() };
    let (mut oracle_ok, mut axioms_ok) = (true, true);
    for _ in 0..1000 {
        let (a, b, c) = (seq(&mut rng), seq(&mut rng), seq(&mut rng));
        let ab = levenshtein(&a, &b);
        oracle_ok &= ab == wagner_fischer(&a, &b);
        axioms_ok &= ab == levenshtein(&b, &a)
            && levenshtein(&a, &a) == 0
            && (ab == 0) == (a == b)
            && levenshtein(&a, &c) <= ab + levenshtein(&b, &c);
    }
    outcome(
        hand && oracle_ok && axioms_ok,
        format!("hand cases {hand}, DP oracle on 1000 pairs {oracle_ok}, metric axioms {axioms_ok}"),
    )
}

fn synthetic_corpus() -> (poirec_core::synthetic::SyntheticData, Corpus) {
    let data = generate(&SyntheticConfig::default());
    let corpus = ingest_reader(Cursor::new(data.jsonl.as_bytes()), "synthetic", &IngestOptions::default())
        .expect("generated corpus parses")
        .corpus;
    (data, corpus)
}

struct EndToEnd {
    trained: Trained,
    reports: String,
}

fn end_to_end(cfg: &RunConfig) -> (Outcome, EndToEnd) {
    let start = Instant::now();
    let (data, corpus) = synthetic_corpus();
    let trained = train_all(&corpus, &Lexicons::default(), cfg).expect("pipeline trains");
    let popularity = popularity_orders(&corpus, &trained.aspects.mentions);
    let (mut planted_hits, mut distances, mut reports) = (0, Vec::new(), String::new());
    for (user, top) in &data.users {
        for method in ExplainMethod::ALL {
            let (_, report) = trained.explain(user, &corpus, cfg.top_n, method, cfg).expect("explainable user");
            if method == ExplainMethod::Core {
                planted_hits += usize::from(report.blocks.first().map(|b| b.categories[0]) == Some(*top));
                distances.extend(explanation_fidelity(&report, &popularity));
            }
            reports.push_str(&serde_json::to_string(&report).expect("serializable"));
            reports.push('\n');
        }
    }
    let took = start.elapsed();
    let share = planted_hits as f64 / data.users.len() as f64;
    let fidelity = distances.iter().sum::<f64>() / distances.len().max(1) as f64;
    let o = outcome(
        took < Duration::from_secs(120) && share >= 0.8 && fidelity <= 0.25,
        format!(
            "{:.0}% planted primary cores, mean fidelity distance {fidelity:.3} over {} places, {took:.2?}",
            share * 100.0,
            distances.len()
        ),
    );
    (o, EndToEnd { trained, reports })
}

fn ordering(report: &BenchmarkReport) -> Outcome {
    let f = |m: Model| report.mean_f(m);
    let (core, rank, dap) = (f(Model::Core), f(Model::Rank), f(Model::Dap));
    outcome(
        core >= rank && rank >= dap - 0.02,
        format!("mean F core {core:.4}, rank {rank:.4}, dap {dap:.4}, dense {:.4}", f(Model::Dense)),
    )
}

fn artifacts(run: &EndToEnd, bench: &BenchmarkReport, corpus: &Corpus) -> Vec<(&'static str, Vec<u8>)> {
    let json = |v: &dyn erased::Json| v.bytes();
    let mut jsonl = Vec::new();
    corpus.write_jsonl(&mut jsonl).expect("in-memory write");
    vec![
        ("corpus", jsonl),
        ("aspects", json(&run.trained.aspects)),
        ("classifier", json(&run.trained.models)),
        ("classified", json(&run.trained.classified)),
        ("recommender", json(&run.trained.recommender)),
        ("explanations", run.reports.clone().into_bytes()),
        ("benchmark_csv", bench.to_csv().into_bytes()),
        ("benchmark_json", json(bench)),
    ]
}

mod erased {
    pub trait Json {
        fn bytes(&self) -> Vec<u8>;
    }

    impl<T: serde::Serialize> Json for T {
        fn bytes(&self) -> Vec<u8> {
            serde_json::to_vec(self).expect("serializable")
        }
    }
}

fn main() -> ExitCode {
    let cfg = desk_config(7);
    let mut results: Vec<(usize, &str, Outcome)> = vec![
        (1, "FM fast predictor equals pairwise oracle", fm_oracle()),
        (2, "FM analytic gradient", fm_gradients()),
        (3, "CNN analytic gradient", cnn_gradients()),
        (4, "CNN learns marker corpus", cnn_sanity()),
        (5, "HITS authority eigenvector", hits_oracle()),
        (6, "bipartite core peeling", core_peeling()),
        (7, "PageRank stochasticity and scaling", pagerank_props()),
        (8, "planted shingle recovery", shingle_recovery()),
        (9, "metrics and edit distance", metrics()),
    ];
    let (e2e, first) = end_to_end(&cfg);
    results.push((10, "end-to-end synthetic run", e2e));
    let (_, corpus) = synthetic_corpus();
    let lex = Lexicons::default();
    let bench = run_benchmark(&corpus, &lex, &cfg).expect("benchmark runs");
    results.push((11, "fold-averaged F ordering", ordering(&bench)));
    let (_, second) = end_to_end(&cfg);
    let bench2 = run_benchmark(&corpus, &lex, &cfg).expect("benchmark runs");
    let a = artifacts(&first, &bench, &corpus);
    let b = artifacts(&second, &bench2, &corpus);
    let differing: Vec<&str> = a.iter().zip(&b).filter(|(x, y)| x.1 != y.1).map(|(x, _)| x.0).collect();
    let detail = if differing.is_empty() {
        format!("{} artifacts byte-identical across two runs", a.len())
    } else {
        format!("differing artifacts: {differing:?}")
    };
    results.push((12, "deterministic artifacts", outcome(differing.is_empty(), detail)));

    let mut failed = 0;
    for (id, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} [{tag}] {name}: {}", o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
