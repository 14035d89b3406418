//! Pure algorithmic core of the sillon corpus platform.
//!
//! Everything here is deterministic and allocation-only: transcript
//! restoration and sentence segmentation, comment normalization,
//! tokenization, gazetteer tagging, the sentence inverted index, the
//! TF-IDF + multinomial logistic regression classifier and the evaluation
//! metrics. IO, persistence and networking live in the `sillon` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod classify;
pub mod evaluate;
pub mod index;
pub mod lexicon;
mod math;
pub mod synth;
pub mod taxonomy;
pub mod text;

pub use classify::{ClassifierModel, LabeledExample, Prediction, SplitConfig, TrainConfig};
pub use evaluate::{ConfusionMatrix, EvalReport};
pub use index::{InvertedIndex, SearchHit};
pub use lexicon::KeywordLexicon;
pub use taxonomy::{ControversyClass, InfoClass, Task, TargetKind};
