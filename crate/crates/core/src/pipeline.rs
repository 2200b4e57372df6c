//! Stage functions shared by the command line and the evaluator.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aspects::{
    extract_candidate_aspects, extract_mentions, label_sentences, AspectMention, AspectResources, AspectVocabulary,
    CategoryLexicon, LabeledSet, PosTagger,
};
use crate::config::RunConfig;
use crate::corpus::{Corpus, Preprocessor, SentenceSplitter, WordList, DEFAULT_PAD};
use crate::error::{Error, Result};
use crate::explain::{explain_recommendations, ExplainMethod, ExplanationReport};
use crate::fm::{
    assemble_design_matrix, fm_train, recommend, AspectProfiles, DesignMatrix, EntityVectors, FeatureSpace, FmModel,
    Scored, VectorMode,
};
use crate::sentiment::{polar_sentences, PolarSentence, ValenceLexicon};
use crate::textcnn::{classify_labeled, train_category_models, CategoryModels, ClassifiedSentence};

/// Text resources: bundled defaults, optionally overridden file by file.
#[derive(Debug, Clone, Default)]
pub struct Lexicons {
    pub splitter: SentenceSplitter,
    pub aspects: AspectResources,
}

impl Lexicons {
    /// Reads `stopwords.txt`, `abbreviations.txt`, `valence.tsv`,
    /// `pos_lexicon.tsv` and `category_lexicon.tsv` from `dir` when present.
    pub fn load(dir: Option<&Path>, top_k: usize) -> Result<Self> {
        let mut lex = Lexicons::default();
        lex.aspects.top_k = top_k;
        let Some(dir) = dir else {
            return Ok(lex);
        };
        let file = |name: &str| Some(dir.join(name)).filter(|p| p.exists());
        if let Some(p) = file("stopwords.txt") {
            lex.aspects.stopwords = WordList::load(&p)?;
        }
        if let Some(p) = file("abbreviations.txt") {
            lex.splitter = SentenceSplitter::new(WordList::load(&p)?);
        }
        if let Some(p) = file("valence.tsv") {
            lex.aspects.valence = ValenceLexicon::load(&p)?;
        }
        if let Some(p) = file("pos_lexicon.tsv") {
            lex.aspects.tagger = PosTagger::load(&p)?;
        }
        if let Some(p) = file("category_lexicon.tsv") {
            lex.aspects.categories = CategoryLexicon::load(&p)?;
        }
        Ok(lex)
    }

    pub fn preprocessor(&self, cfg: &RunConfig) -> Preprocessor {
        Preprocessor::new(self.aspects.stopwords.clone(), DEFAULT_PAD, cfg.cnn.max_len)
    }
}

/// Output of aspect extraction and training-data labeling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectStage {
    pub vocabulary: AspectVocabulary,
    pub mentions: Vec<AspectMention>,
    pub labeled: LabeledSet,
}

pub fn extract_aspects(corpus: &Corpus, lex: &Lexicons, cfg: &RunConfig) -> AspectStage {
    let sentences = polar_sentences(corpus, &lex.splitter, &lex.aspects.valence);
    aspects_from_sentences(&sentences, lex, cfg)
}

fn aspects_from_sentences(sentences: &[PolarSentence], lex: &Lexicons, cfg: &RunConfig) -> AspectStage {
    let vocabulary = extract_candidate_aspects(sentences.iter().map(|s| &s.sentence), &lex.aspects, cfg.freq_threshold);
    let mentions = extract_mentions(sentences, &vocabulary, &lex.aspects);
    let labeled = label_sentences(sentences, &mentions, &lex.preprocessor(cfg));
    AspectStage {
        vocabulary,
        mentions,
        labeled,
    }
}

pub fn train_classifier(labeled: &LabeledSet, cfg: &RunConfig) -> Result<CategoryModels> {
    train_category_models(labeled, &cfg.cnn, &cfg.cnn_train, None)
}

/// Segments, scores and classifies every review sentence of `corpus`.
pub fn classify_corpus(models: &CategoryModels, corpus: &Corpus, lex: &Lexicons, cfg: &RunConfig) -> Vec<ClassifiedSentence> {
    let sentences = polar_sentences(corpus, &lex.splitter, &lex.aspects.valence);
    let unlabeled = label_sentences(&sentences, &[], &lex.preprocessor(cfg));
    classify_labeled(models, &unlabeled)
}

/// A trained factorization machine with everything needed to score pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommender {
    pub profiles: AspectProfiles,
    pub space: FeatureSpace,
    pub model: FmModel,
}

impl Recommender {
    /// Every corpus place is a candidate, including ones the user already visited.
    pub fn recommend(&self, user: &str, corpus: &Corpus, n: usize) -> Result<Vec<Scored>> {
        let candidates: Vec<String> = corpus.places.keys().cloned().collect();
        recommend(user, &self.model, &self.space, &self.profiles, &candidates, n)
    }
}

/// Builds the design matrix and fits the factorization machine.
pub fn train_recommender(
    corpus: &Corpus,
    classified: &[ClassifiedSentence],
    pooled: Option<(&CategoryModels, &LabeledSet)>,
    cfg: &RunConfig,
) -> Result<(Recommender, DesignMatrix)> {
    let log = corpus.build_checkin_log();
    let profiles = AspectProfiles::build(classified);
    let vectors = match (cfg.vector_mode, pooled) {
        (VectorMode::CategorySentiment, _) => EntityVectors::from_profiles(&profiles, corpus),
        (VectorMode::PooledCnn, Some((models, labeled))) => EntityVectors::pooled(models, labeled, corpus),
        (VectorMode::PooledCnn, None) => {
            return Err(Error::InvalidConfig("pooled vectors need the classifier and labeled sentences".into()))
        }
    };
    let space = FeatureSpace::new(corpus, &log, vectors, cfg.eps_km);
    let design = assemble_design_matrix(corpus, &log, classified, &profiles, &space, &cfg.sampling)?;
    let model = fm_train(&design.training_rows(), design.dim, &cfg.fm)?;
    Ok((Recommender { profiles, space, model }, design))
}

/// Every stage trained on one corpus.
#[derive(Debug, Clone)]
pub struct Trained {
    pub aspects: AspectStage,
    pub models: CategoryModels,
    pub classified: Vec<ClassifiedSentence>,
    pub recommender: Recommender,
}

pub fn train_all(corpus: &Corpus, lex: &Lexicons, cfg: &RunConfig) -> Result<Trained> {
    let aspects = extract_aspects(corpus, lex, cfg);
    let models = train_classifier(&aspects.labeled, cfg)?;
    let classified = classify_labeled(&models, &aspects.labeled);
    let (recommender, _) = train_recommender(corpus, &classified, Some((&models, &aspects.labeled)), cfg)?;
    Ok(Trained {
        aspects,
        models,
        classified,
        recommender,
    })
}

impl Trained {
    /// Top-`n` recommendations and their explanation.
    pub fn explain(
        &self,
        user: &str,
        corpus: &Corpus,
        n: usize,
        method: ExplainMethod,
        cfg: &RunConfig,
    ) -> Result<(Vec<Scored>, ExplanationReport)> {
        let recs = self.recommender.recommend(user, corpus, n)?;
        let places: Vec<String> = recs.iter().map(|s| s.place_id.clone()).collect();
        let report = explain_recommendations(user, &places, &self.classified, corpus, method, &cfg.explain)?;
        Ok((recs, report))
    }
}
