//! Structure-aware evaluation of translated XML documents, reward shaping
//! for policy training, and significance testing.

// `!(x > 0.0)` is how config checks reject NaN along with the range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpusio;
pub mod docmetrics;
pub mod error;
pub mod grposim;
pub mod nodealign;
pub mod rewards;
pub mod stats;
pub mod textmetrics;
pub mod treedist;
pub mod xmltree;

pub use corpusio::{CorpusRecord, ReportFormat};
pub use docmetrics::{evaluate_corpus, CorpusReport, EvalConfig, Metric};
pub use error::{Error, Result};
pub use rewards::{score_reward, RewardSpec};
pub use xmltree::{parse_document, DocTree, ParseOutcome};
