//! Aspect-aware point-of-interest recommendation with explanations.

pub mod aspects;
pub mod config;
pub mod corpus;
pub mod error;
pub mod evaluate;
pub mod explain;
pub mod fm;
pub mod pipeline;
pub mod sentiment;
pub mod synthetic;
pub mod textcnn;

pub use aspects::{AspectCategory, AspectMention, AspectVocabulary, LabeledSet};
pub use config::RunConfig;
pub use corpus::{Corpus, GeoPoint, Place, Review, User};
pub use error::{Error, Result};
pub use explain::{ExplainMethod, ExplanationReport};
pub use sentiment::{Polarity, PolarityLabel};
