//! Chronological cross-validation, top-N metrics and explanation fidelity.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aspects::{category_popularity, AspectCategory, AspectMention};
use crate::config::{ListMode, RunConfig};
use crate::corpus::{Corpus, Review};
use crate::error::{Error, Result};
use crate::explain::{explain_recommendations, ExplainMethod, ExplanationReport};
use crate::pipeline::{classify_corpus, train_all, Lexicons, Trained};
use crate::textcnn::ClassifiedSentence;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold: usize,
    pub train: Vec<String>,
    /// Held-out review ids; their places are the relevant items.
    pub test: Vec<String>,
}

impl FoldSplit {
    pub fn materialize(&self, corpus: &Corpus) -> (Corpus, Corpus) {
        let pick = |ids: &[String]| {
            let set: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
            corpus.with_reviews(corpus.reviews.iter().filter(|r| set.contains(r.review_id.as_str())).cloned().collect())
        };
        (pick(&self.train), pick(&self.test))
    }
}

/// Drops users and places with fewer than `min_reviews` reviews until none remain.
pub fn eligible_reviews(corpus: &Corpus, min_reviews: usize) -> Vec<&Review> {
    let mut keep: Vec<&Review> = corpus.reviews.iter().collect();
    loop {
        let mut users: BTreeMap<&str, usize> = BTreeMap::new();
        let mut places: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &keep {
            *users.entry(&r.user_id).or_default() += 1;
            *places.entry(&r.place_id).or_default() += 1;
        }
        let before = keep.len();
        keep.retain(|r| users[r.user_id.as_str()] >= min_reviews && places[r.place_id.as_str()] >= min_reviews);
        if keep.len() == before {
            return keep;
        }
    }
}

/// Per user, reviews in time order are cut into `k` contiguous blocks; fold
/// `i` holds out block `i` of every user.
pub fn chronological_folds(corpus: &Corpus, k: usize, min_reviews: usize) -> Result<Vec<FoldSplit>> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 folds, got {k}")));
    }
    let mut by_user: BTreeMap<&str, Vec<&Review>> = BTreeMap::new();
    for r in eligible_reviews(corpus, min_reviews) {
        by_user.entry(&r.user_id).or_default().push(r);
    }
    if by_user.is_empty() {
        return Err(Error::NoEligibleUsers { min_reviews });
    }
    let mut folds: Vec<FoldSplit> = (0..k)
        .map(|fold| FoldSplit {
            fold,
            train: Vec::new(),
            test: Vec::new(),
        })
        .collect();
    for reviews in by_user.values_mut() {
        reviews.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.review_id.cmp(&b.review_id)));
        let n = reviews.len();
        let mut start = 0;
        for block in 0..k {
            let len = n / k + usize::from(block < n % k);
            for (i, r) in reviews.iter().enumerate() {
                let id = r.review_id.clone();
                if (start..start + len).contains(&i) {
                    folds[block].test.push(id);
                } else {
                    folds[block].train.push(id);
                }
            }
            start += len;
        }
    }
    Ok(folds)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsAtN {
    pub n: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

impl MetricsAtN {
    pub fn new(n: usize, precision: f64, recall: f64) -> Self {
        MetricsAtN {
            n,
            precision,
            recall,
            f_score: f_score(precision, recall),
        }
    }
}

pub fn f_score(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// `None` when `relevant` is empty.
pub fn precision_recall_at_n<S: AsRef<str>>(recommended: &[S], relevant: &BTreeSet<String>, n: usize) -> Option<MetricsAtN> {
    if relevant.is_empty() {
        return None;
    }
    let top: BTreeSet<&str> = recommended.iter().take(n).map(AsRef::as_ref).collect();
    let hits = top.iter().filter(|p| relevant.contains(**p)).count() as f64;
    let shown = n.min(recommended.len());
    let precision = if shown == 0 { 0.0 } else { hits / shown as f64 };
    Some(MetricsAtN::new(n, precision, hits / relevant.len() as f64))
}

/// Edit distance with unit insert, delete and substitute costs.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Normalized distance between two orderings restricted to their common
/// categories; `None` when they share none.
pub fn ordering_distance(explained: &[AspectCategory], popular: &[AspectCategory]) -> Option<f64> {
    let a: Vec<AspectCategory> = explained.iter().copied().filter(|c| popular.contains(c)).collect();
    let b: Vec<AspectCategory> = popular.iter().copied().filter(|c| explained.contains(c)).collect();
    let len = a.len().max(b.len());
    (len > 0).then(|| levenshtein(&a, &b) as f64 / len as f64)
}

/// Category order by popularity for every place with mentions.
pub fn popularity_orders(corpus: &Corpus, mentions: &[AspectMention]) -> BTreeMap<String, Vec<AspectCategory>> {
    let mut by_place: BTreeMap<&str, Vec<AspectMention>> = BTreeMap::new();
    for m in mentions {
        by_place.entry(&m.place_id).or_default().push(m.clone());
    }
    by_place
        .into_iter()
        .filter_map(|(p, ms)| {
            let order = category_popularity(p, corpus, &ms).ok()?;
            Some((p.to_string(), order.into_iter().map(|(c, _)| c).collect()))
        })
        .collect()
}

/// Per explained place, the distance between its category order in the
/// explanation and its popularity order.
pub fn explanation_fidelity(report: &ExplanationReport, popularity: &BTreeMap<String, Vec<AspectCategory>>) -> Vec<f64> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for p in report.blocks.iter().flat_map(|b| &b.places) {
        if !seen.insert(p.as_str()) {
            continue;
        }
        let Some(pop) = popularity.get(p) else { continue };
        if let Some(d) = ordering_distance(&report.categories_for_place(p), pop) {
            out.push(d);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// The factorization machine's single ranked list.
    Dap,
    Core,
    Rank,
    Dense,
}

impl Model {
    pub const ALL: [Model; 4] = [Model::Dap, Model::Core, Model::Rank, Model::Dense];

    pub fn name(self) -> &'static str {
        match self {
            Model::Dap => "dap",
            Model::Core => "core",
            Model::Rank => "rank",
            Model::Dense => "dense",
        }
    }

    pub fn method(self) -> Option<ExplainMethod> {
        match self {
            Model::Dap => None,
            Model::Core => Some(ExplainMethod::Core),
            Model::Rank => Some(ExplainMethod::Rank),
            Model::Dense => Some(ExplainMethod::Dense),
        }
    }
}

impl From<ExplainMethod> for Model {
    fn from(m: ExplainMethod) -> Self {
        match m {
            ExplainMethod::Core => Model::Core,
            ExplainMethod::Rank => Model::Rank,
            ExplainMethod::Dense => Model::Dense,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub model: Model,
    pub n: usize,
    pub fold: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub users: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageRow {
    pub model: Model,
    pub n: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

/// Per-fold rows and fold averages under one list mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTable {
    pub list_mode: ListMode,
    pub rows: Vec<MetricRow>,
    pub averages: Vec<AverageRow>,
}

impl ModeTable {
    fn from_rows(list_mode: ListMode, mut rows: Vec<MetricRow>) -> Self {
        rows.sort_by_key(|r| (r.model, r.n, r.fold));
        let mut groups: BTreeMap<(Model, usize), Vec<&MetricRow>> = BTreeMap::new();
        for r in &rows {
            groups.entry((r.model, r.n)).or_default().push(r);
        }
        let averages = groups
            .into_iter()
            .map(|((model, n), rs)| {
                let k = rs.len() as f64;
                AverageRow {
                    model,
                    n,
                    precision: rs.iter().map(|r| r.precision).sum::<f64>() / k,
                    recall: rs.iter().map(|r| r.recall).sum::<f64>() / k,
                    f_score: rs.iter().map(|r| r.f_score).sum::<f64>() / k,
                }
            })
            .collect();
        ModeTable {
            list_mode,
            rows,
            averages,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,N,fold,precision,recall,f\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{},{}", r.model.name(), r.n, r.fold, r.precision, r.recall, r.f_score);
        }
        out
    }

    pub fn average(&self, model: Model, n: usize) -> Option<&AverageRow> {
        self.averages.iter().find(|a| a.model == model && a.n == n)
    }

    /// F-score averaged over every N.
    pub fn mean_f(&self, model: Model) -> f64 {
        let rows: Vec<f64> = self.averages.iter().filter(|a| a.model == model).map(|a| a.f_score).collect();
        rows.iter().sum::<f64>() / rows.len().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    /// The configured list mode first, then the other one.
    pub tables: Vec<ModeTable>,
    /// Mean normalized explanation-order distance per method.
    pub fidelity: BTreeMap<ExplainMethod, f64>,
    /// Test users without training data.
    pub skipped_users: usize,
}

impl BenchmarkReport {
    pub fn primary(&self) -> &ModeTable {
        &self.tables[0]
    }

    pub fn table(&self, mode: ListMode) -> Option<&ModeTable> {
        self.tables.iter().find(|t| t.list_mode == mode)
    }

    pub fn to_csv(&self) -> String {
        self.primary().to_csv()
    }

    pub fn mean_f(&self, model: Model) -> f64 {
        self.primary().mean_f(model)
    }
}

/// The most frequent non-`None` category of each review; ties go to the
/// earlier category.
pub fn dominant_categories(classified: &[ClassifiedSentence]) -> BTreeMap<String, AspectCategory> {
    let mut counts: BTreeMap<&str, BTreeMap<AspectCategory, usize>> = BTreeMap::new();
    for s in classified {
        for c in s.categories.iter().filter(|c| **c != AspectCategory::None) {
            *counts.entry(&s.review_id).or_default().entry(*c).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .filter_map(|(r, m)| {
            let best = m.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))?;
            Some((r.to_string(), *best.0))
        })
        .collect()
}

const LIST_MODES: [ListMode; 2] = [ListMode::PerCategory, ListMode::Union];

/// Metrics of category lists: each held-out place is looked up in the list
/// of its review's dominant category (or all lists in union mode).
fn list_metrics(
    report: &ExplanationReport,
    held_out: &[(String, Option<AspectCategory>)],
    relevant: &BTreeSet<String>,
    n: usize,
    mode: ListMode,
) -> MetricsAtN {
    let lists = report.category_lists();
    let top = |c: &AspectCategory| -> Vec<&str> { lists.get(c).map(|l| l.iter().take(n).map(String::as_str).collect()).unwrap_or_default() };
    let primary = report.category_order().first().copied();
    let mut shown: BTreeSet<&str> = BTreeSet::new();
    let mut hits: BTreeSet<&str> = BTreeSet::new();
    match mode {
        ListMode::Union => {
            shown = lists.keys().flat_map(top).collect();
            hits = shown.iter().copied().filter(|p| relevant.contains(*p)).collect();
        }
        ListMode::PerCategory => {
            for (place, cat) in held_out {
                let Some(c) = cat.or(primary) else { continue };
                let list = top(&c);
                if list.contains(&place.as_str()) {
                    hits.insert(list[list.iter().position(|p| *p == place).expect("present")]);
                }
                shown.extend(list);
            }
        }
    }
    let precision = if shown.is_empty() { 0.0 } else { hits.len() as f64 / shown.len() as f64 };
    MetricsAtN::new(n, precision, hits.len() as f64 / relevant.len() as f64)
}

struct FoldResult {
    rows: Vec<(ListMode, MetricRow)>,
    fidelity: BTreeMap<ExplainMethod, Vec<f64>>,
    skipped: usize,
}

fn evaluate_fold(corpus: &Corpus, split: &FoldSplit, lex: &Lexicons, cfg: &RunConfig) -> Result<FoldResult> {
    let (train, test) = split.materialize(corpus);
    let trained = train_all(&train, lex, cfg)?;
    let dominant = dominant_categories(&classify_corpus(&trained.models, &test, lex, cfg));
    let popularity = popularity_orders(&train, &trained.aspects.mentions);
    let mut held: BTreeMap<&str, Vec<(String, Option<AspectCategory>)>> = BTreeMap::new();
    for r in &test.reviews {
        held.entry(&r.user_id).or_default().push((r.place_id.clone(), dominant.get(&r.review_id).copied()));
    }
    let ns = &cfg.eval.ns;
    // (precision, recall, f) sums and user count per list mode, model and N
    type Sums = BTreeMap<(ListMode, Model, usize), (f64, f64, f64, usize)>;
    let mut sums = Sums::new();
    let mut fidelity: BTreeMap<ExplainMethod, Vec<f64>> = BTreeMap::new();
    let mut skipped = 0;
    let longest = ns.iter().copied().max().unwrap_or(0).max(cfg.eval.list_len.unwrap_or(0));
    for (user, items) in &held {
        let relevant: BTreeSet<String> = items.iter().map(|(p, _)| p.clone()).collect();
        let recs = match trained.recommender.recommend(user, &train, longest) {
            Ok(r) => r,
            Err(Error::ColdStart(_)) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let list: Vec<String> = recs.into_iter().map(|s| s.place_id).collect();
        let explain = |m: ExplainMethod, len: usize| match explain_recommendations(
            user,
            &list[..len.min(list.len())],
            &trained.classified,
            &train,
            m,
            &cfg.explain,
        ) {
            Ok(r) => Ok(Some(r)),
            Err(Error::EmptyGraph { .. }) => Ok(None),
            Err(e) => Err(e),
        };
        let mut record = |mode: ListMode, model: Model, m: MetricsAtN| {
            let e = sums.entry((mode, model, m.n)).or_default();
            e.0 += m.precision;
            e.1 += m.recall;
            e.2 += m.f_score;
            e.3 += 1;
        };
        for &n in ns {
            let m = precision_recall_at_n(&list, &relevant, n).expect("non-empty relevant set");
            for mode in LIST_MODES {
                record(mode, Model::Dap, m);
            }
        }
        for m in ExplainMethod::ALL {
            let model = Model::from(m);
            let mut score = |report: &Option<ExplanationReport>, n: usize| {
                for mode in LIST_MODES {
                    let m = match report {
                        Some(r) => list_metrics(r, items, &relevant, n, mode),
                        None => MetricsAtN::new(n, 0.0, 0.0),
                    };
                    record(mode, model, m);
                }
            };
            let fidelity_len = match cfg.eval.list_len {
                Some(len) => {
                    let report = explain(m, len)?;
                    for &n in ns {
                        score(&report, n);
                    }
                    len
                }
                None => {
                    for &n in ns {
                        score(&explain(m, n)?, n);
                    }
                    cfg.top_n
                }
            };
            if let Some(r) = explain(m, fidelity_len)? {
                fidelity.entry(m).or_default().extend(explanation_fidelity(&r, &popularity));
            }
        }
    }
    let rows = sums
        .into_iter()
        .map(|((mode, model, n), (p, r, f, users))| {
            let d = users.max(1) as f64;
            let row = MetricRow {
                model,
                n,
                fold: split.fold,
                precision: p / d,
                recall: r / d,
                f_score: f / d,
                users,
            };
            (mode, row)
        })
        .collect();
    Ok(FoldResult { rows, fidelity, skipped })
}

/// Cross-validated comparison of the plain ranking against the three
/// explanation-derived category lists.
pub fn run_benchmark(corpus: &Corpus, lex: &Lexicons, cfg: &RunConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let folds = chronological_folds(corpus, cfg.eval.folds, cfg.eval.min_reviews)?;
    let results: Vec<Result<FoldResult>> = folds
        .par_iter()
        .map(|split| {
            info!("fold {}: {} train, {} test reviews", split.fold, split.train.len(), split.test.len());
            evaluate_fold(corpus, split, lex, cfg).map_err(|e| Error::Fold {
                fold: split.fold,
                source: Box::new(e),
            })
        })
        .collect();
    let mut rows: BTreeMap<ListMode, Vec<MetricRow>> = BTreeMap::new();
    let mut fidelity: BTreeMap<ExplainMethod, Vec<f64>> = BTreeMap::new();
    let mut skipped_users = 0;
    for r in results {
        let r = r?;
        for (mode, row) in r.rows {
            rows.entry(mode).or_default().push(row);
        }
        for (m, v) in r.fidelity {
            fidelity.entry(m).or_default().extend(v);
        }
        skipped_users += r.skipped;
    }
    let primary = cfg.eval.list_mode;
    let mut tables = vec![ModeTable::from_rows(primary, rows.remove(&primary).unwrap_or_default())];
    tables.extend(rows.into_iter().map(|(mode, rs)| ModeTable::from_rows(mode, rs)));
    let fidelity = fidelity
        .into_iter()
        .map(|(m, v)| (m, v.iter().sum::<f64>() / v.len().max(1) as f64))
        .collect();
    Ok(BenchmarkReport {
        tables,
        fidelity,
        skipped_users,
    })
}

/// One cell of the case-study table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudyCell {
    pub user_id: String,
    pub order: usize,
    pub category: AspectCategory,
    pub places: usize,
}

/// Ordered cores of each user, laid out with one row per core order and
/// one column per user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudy {
    pub users: Vec<String>,
    pub cells: Vec<CaseStudyCell>,
}

const ORDINALS: [&str; 7] = ["Primary", "Secondary", "Tertiary", "Quaternary", "Quinary", "Senary", "Septenary"];

impl CaseStudy {
    pub fn to_text(&self) -> String {
        let depth = self.cells.iter().map(|c| c.order).max().unwrap_or(0);
        let mut out = String::from("Core");
        for u in &self.users {
            let _ = write!(out, "\t{u}");
        }
        out.push('\n');
        for order in 1..=depth {
            out.push_str(ORDINALS.get(order - 1).copied().unwrap_or("Further"));
            for u in &self.users {
                let cell = self.cells.iter().find(|c| c.order == order && &c.user_id == u);
                match cell {
                    Some(c) => {
                        let noun = if c.places == 1 { "place" } else { "places" };
                        let _ = write!(out, "\t{} ({} {noun})", c.category, c.places);
                    }
                    None => out.push_str("\t-"),
                }
            }
            out.push('\n');
        }
        out
    }
}

pub fn case_study(trained: &Trained, corpus: &Corpus, users: &[String], cfg: &RunConfig) -> Result<CaseStudy> {
    let mut cells = Vec::new();
    for u in users {
        let (_, report) = trained.explain(u, corpus, cfg.top_n, ExplainMethod::Core, cfg)?;
        cells.extend(report.blocks.iter().enumerate().map(|(i, b)| CaseStudyCell {
            user_id: u.clone(),
            order: i + 1,
            category: b.categories[0],
            places: b.places.len(),
        }));
    }
    Ok(CaseStudy {
        users: users.to_vec(),
        cells,
    })
}
