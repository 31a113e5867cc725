//! Text analytics for comment corpora: n-gram statistics, embedding-based
//! topic discovery, Ward clustering of topics into clades, clade-driven
//! sentiment labeling, five sentiment classifiers with agreement metrics,
//! and brand reputation scoring by topic similarity.

pub mod clades;
pub mod classify;
pub mod corpus;
pub mod error;
pub mod label;
pub mod metrics;
pub mod ngrams;
pub mod reputation;
pub mod svg;
pub mod topicmodel;
pub mod vectorspace;

pub use error::{Error, Result};
pub use label::Label;
