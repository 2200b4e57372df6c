use std::collections::BTreeMap;
use std::path::Path;

use poirec_core::aspects::LabeledSet;
use poirec_core::config::ListMode;
use poirec_core::corpus::{ingest_reviews, IngestOptions};
use poirec_core::evaluate::{case_study, run_benchmark, BenchmarkReport, Model};
use poirec_core::explain::explain_recommendations;
use poirec_core::fm::Scored;
use poirec_core::pipeline::{extract_aspects, train_classifier, train_recommender, AspectStage, Lexicons, Recommender, Trained};
use poirec_core::synthetic::{generate, SyntheticConfig};
use poirec_core::textcnn::{classify_labeled, CategoryModels, ClassifiedSentence};
use poirec_core::{Corpus, Error, ExplainMethod, ExplanationReport, RunConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::artifact::{self, sha256_hex, Kind, Loaded, Store};
use crate::error::Result;

/// What a command read and wrote, printed to stderr when it finishes.
#[derive(Debug, Default)]
pub struct Manifest {
    stage: &'static str,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
    summary: Vec<(String, Value)>,
}

impl Manifest {
    fn new(stage: &'static str) -> Self {
        Manifest {
            stage,
            ..Manifest::default()
        }
    }

    fn input<T>(&mut self, kind: Kind, loaded: &Loaded<T>) {
        self.inputs.insert(kind.file.to_string(), loaded.hash.clone());
    }

    fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.push((key.to_string(), value.into()));
    }

    pub fn render(&self) -> String {
        let mut out = format!("stage {}\n", self.stage);
        for (name, hash) in &self.inputs {
            out += &format!("  input  {name} sha256:{hash}\n");
        }
        for (name, hash) in &self.outputs {
            out += &format!("  output {name} sha256:{hash}\n");
        }
        for (k, v) in &self.summary {
            out += &format!("  {k}: {v}\n");
        }
        out
    }
}

/// Run context shared by every command.
pub struct Ctx {
    pub cfg: RunConfig,
    pub store: Store,
    pub lex: Lexicons,
}

impl Ctx {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        let lex = Lexicons::load(cfg.paths.lexicons.as_deref(), cfg.top_k_categories)?;
        let store = Store::new(cfg.paths.model_dir.clone(), cfg.clone());
        Ok(Ctx { cfg, store, lex })
    }

    fn load<T: serde::de::DeserializeOwned>(&self, kind: Kind, m: &mut Manifest) -> Result<T> {
        let loaded = self.store.load(kind)?;
        m.input(kind, &loaded);
        Ok(loaded.payload)
    }

    fn save<T: Serialize>(&self, kind: Kind, m: &mut Manifest, payload: &T) -> Result<()> {
        let hash = self.store.write(kind, m.inputs.clone(), payload)?;
        m.outputs.insert(kind.file.to_string(), hash);
        Ok(())
    }

    fn save_raw(&self, file: &str, m: &mut Manifest, bytes: &[u8]) -> Result<()> {
        let hash = self.store.write_raw(file, bytes)?;
        m.outputs.insert(file.to_string(), hash);
        Ok(())
    }
}

pub fn ingest(ctx: &Ctx) -> Result<Manifest> {
    let mut m = Manifest::new("ingest");
    let Some(path) = ctx.cfg.paths.corpus.as_deref() else {
        return Err(Error::InvalidConfig("no corpus path; pass --corpus or set paths.corpus".into()).into());
    };
    let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
    m.inputs.insert(name, sha256_hex(&artifact::read_file(path)?));
    let opts = IngestOptions {
        error_rate_cap: ctx.cfg.error_rate_cap,
    };
    let ingested = ingest_reviews(path, &opts)?;
    for r in &ingested.rejected {
        log::warn!("line {} rejected: {}", r.line, r.reason);
    }
    let c = &ingested.corpus;
    m.note("reviews", c.len());
    m.note("users", c.users.len());
    m.note("places", c.places.len());
    m.note("rejected", ingested.rejected.len());
    ctx.save(artifact::CORPUS, &mut m, c)?;
    Ok(m)
}

pub fn extract(ctx: &Ctx) -> Result<Manifest> {
    let mut m = Manifest::new("extract-aspects");
    let corpus: Corpus = ctx.load(artifact::CORPUS, &mut m)?;
    let stage = extract_aspects(&corpus, &ctx.lex, &ctx.cfg);
    m.note("aspect_terms", stage.vocabulary.terms.len());
    m.note("mentions", stage.mentions.len());
    m.note("labeled_sentences", stage.labeled.sentences.len());
    ctx.save(artifact::ASPECTS, &mut m, &stage)?;
    Ok(m)
}

pub fn train_cnn(ctx: &Ctx) -> Result<Manifest> {
    let mut m = Manifest::new("train-classifier");
    let stage: AspectStage = ctx.load(artifact::ASPECTS, &mut m)?;
    let models = train_classifier(&stage.labeled, &ctx.cfg)?;
    m.note("categories", models.models.len());
    ctx.save(artifact::CLASSIFIER, &mut m, &models)?;
    Ok(m)
}

pub fn classify(ctx: &Ctx) -> Result<Manifest> {
    let mut m = Manifest::new("classify");
    let stage: AspectStage = ctx.load(artifact::ASPECTS, &mut m)?;
    let models: CategoryModels = ctx.load(artifact::CLASSIFIER, &mut m)?;
    let classified = classify_labeled(&models, &stage.labeled);
    m.note("sentences", classified.len());
    ctx.save(artifact::CLASSIFIED, &mut m, &classified)?;
    Ok(m)
}

pub fn train_fm(ctx: &Ctx) -> Result<Manifest> {
    let mut m = Manifest::new("train-fm");
    let corpus: Corpus = ctx.load(artifact::CORPUS, &mut m)?;
    let stage: AspectStage = ctx.load(artifact::ASPECTS, &mut m)?;
    let models: CategoryModels = ctx.load(artifact::CLASSIFIER, &mut m)?;
    let classified: Vec<ClassifiedSentence> = ctx.load(artifact::CLASSIFIED, &mut m)?;
    let labeled: &LabeledSet = &stage.labeled;
    let (rec, design) = train_recommender(&corpus, &classified, Some((&models, labeled)), &ctx.cfg)?;
    m.note("features", design.dim);
    m.note("rows", design.rows.len());
    ctx.save(artifact::RECOMMENDER, &mut m, &rec)?;
    Ok(m)
}

fn users_of<'a>(corpus: &'a Corpus, only: Option<&'a str>) -> Vec<&'a str> {
    match only {
        Some(u) => vec![u],
        None => corpus.users.keys().map(String::as_str).collect(),
    }
}

pub fn recommend(ctx: &Ctx, user: Option<&str>) -> Result<Manifest> {
    let mut m = Manifest::new("recommend");
    let corpus: Corpus = ctx.load(artifact::CORPUS, &mut m)?;
    let rec: Recommender = ctx.load(artifact::RECOMMENDER, &mut m)?;
    let mut lists: BTreeMap<String, Vec<Scored>> = BTreeMap::new();
    for u in users_of(&corpus, user) {
        let list = match rec.recommend(u, &corpus, ctx.cfg.top_n) {
            Err(Error::ColdStart(_)) if user.is_none() => continue,
            r => r?,
        };
        for s in &list {
            println!("{u}\t{}\t{:.6}", s.place_id, s.score);
        }
        lists.insert(u.to_string(), list);
    }
    m.note("users", lists.len());
    ctx.save(artifact::RECOMMENDATIONS, &mut m, &lists)?;
    Ok(m)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct UserExplanation {
    pub user_id: String,
    pub recommendations: Vec<Scored>,
    /// `None` when none of the recommended places has a praised category.
    pub report: Option<ExplanationReport>,
}

fn explanation_kind(method: ExplainMethod) -> Kind {
    match method {
        ExplainMethod::Core => artifact::EXPLANATIONS_CORE,
        ExplainMethod::Rank => artifact::EXPLANATIONS_RANK,
        ExplainMethod::Dense => artifact::EXPLANATIONS_DENSE,
    }
}

pub fn explain(ctx: &Ctx, method: ExplainMethod, user: Option<&str>) -> Result<Manifest> {
    let mut m = Manifest::new("explain");
    let corpus: Corpus = ctx.load(artifact::CORPUS, &mut m)?;
    let classified: Vec<ClassifiedSentence> = ctx.load(artifact::CLASSIFIED, &mut m)?;
    let rec: Recommender = ctx.load(artifact::RECOMMENDER, &mut m)?;
    let mut out = Vec::new();
    for u in users_of(&corpus, user) {
        let recs = match rec.recommend(u, &corpus, ctx.cfg.top_n) {
            Err(Error::ColdStart(_)) if user.is_none() => continue,
            r => r?,
        };
        let places: Vec<String> = recs.iter().map(|s| s.place_id.clone()).collect();
        let report = match explain_recommendations(u, &places, &classified, &corpus, method, &ctx.cfg.explain) {
            Ok(r) => Some(r),
            Err(Error::EmptyGraph { .. }) if user.is_none() => None,
            Err(e) => return Err(e.into()),
        };
        println!("== {u}");
        match &report {
            Some(r) => print!("{}", r.to_text()),
            None => println!("(no praised categories among the recommendations)"),
        }
        out.push(UserExplanation {
            user_id: u.to_string(),
            recommendations: recs,
            report,
        });
    }
    m.note("method", method.name());
    m.note("users", out.len());
    m.note("unexplained", out.iter().filter(|e| e.report.is_none()).count());
    ctx.save(explanation_kind(method), &mut m, &out)?;
    Ok(m)
}

fn mode_name(mode: ListMode) -> &'static str {
    match mode {
        ListMode::PerCategory => "per_category",
        ListMode::Union => "union",
    }
}

pub fn evaluate(ctx: &Ctx) -> Result<Manifest> {
    let mut m = Manifest::new("evaluate");
    // the trained pipeline must exist and be consistent before the folds retrain it
    let _: serde::de::IgnoredAny = ctx.load(artifact::RECOMMENDER, &mut m)?;
    let corpus: Corpus = ctx.load(artifact::CORPUS, &mut m)?;
    let report: BenchmarkReport = run_benchmark(&corpus, &ctx.lex, &ctx.cfg)?;
    println!("mode\tmodel\tN\tprecision\trecall\tf");
    for t in &report.tables {
        for a in &t.averages {
            println!(
                "{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}",
                mode_name(t.list_mode),
                a.model.name(),
                a.n,
                a.precision,
                a.recall,
                a.f_score
            );
        }
    }
    for (method, d) in &report.fidelity {
        m.note(&format!("fidelity_{method}"), *d);
    }
    for model in Model::ALL {
        m.note(&format!("mean_f_{}", model.name()), report.mean_f(model));
    }
    m.note("skipped_users", report.skipped_users);
    ctx.save(artifact::BENCHMARK, &mut m, &report)?;
    ctx.save_raw("benchmark.csv", &mut m, report.to_csv().as_bytes())?;
    for t in &report.tables {
        ctx.save_raw(&format!("benchmark_{}.csv", mode_name(t.list_mode)), &mut m, t.to_csv().as_bytes())?;
    }
    Ok(m)
}

pub fn case(ctx: &Ctx, users: &[String]) -> Result<Manifest> {
    let mut m = Manifest::new("case-study");
    let corpus: Corpus = ctx.load(artifact::CORPUS, &mut m)?;
    let aspects: AspectStage = ctx.load(artifact::ASPECTS, &mut m)?;
    let models: CategoryModels = ctx.load(artifact::CLASSIFIER, &mut m)?;
    let classified: Vec<ClassifiedSentence> = ctx.load(artifact::CLASSIFIED, &mut m)?;
    let recommender: Recommender = ctx.load(artifact::RECOMMENDER, &mut m)?;
    let trained = Trained {
        aspects,
        models,
        classified,
        recommender,
    };
    let users: Vec<String> = if users.is_empty() {
        corpus.users.keys().take(3).cloned().collect()
    } else {
        users.to_vec()
    };
    let study = case_study(&trained, &corpus, &users, &ctx.cfg)?;
    print!("{}", study.to_text());
    m.note("users", users.len());
    ctx.save(artifact::CASE_STUDY, &mut m, &study)?;
    Ok(m)
}

/// Writes a generated corpus and its planted preferences next to it.
pub fn synthesize(synth: &SyntheticConfig, output: &Path) -> Result<Manifest> {
    let mut m = Manifest::new("generate-synthetic");
    let data = generate(synth);
    let write = |path: &Path, bytes: &[u8]| -> Result<String> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
        Ok(sha256_hex(bytes))
    };
    let truth = output.with_extension("planted.json");
    let planted = json!({ "config": synth, "users": data.users, "places": data.places });
    let mut truth_bytes = serde_json::to_vec_pretty(&planted).map_err(Error::from)?;
    truth_bytes.push(b'\n');
    m.outputs.insert(output.display().to_string(), write(output, data.jsonl.as_bytes())?);
    m.outputs.insert(truth.display().to_string(), write(&truth, &truth_bytes)?);
    m.note("reviews", synth.reviews);
    Ok(m)
}
