//! Dialogue-grounded character relationship extraction for novels.
//!
//! The pipeline: segment novel text into dialogue units, build
//! retrieval-augmented prompts per character pair, query a chat backend,
//! parse answers into three-dimensional relationship labels, score them,
//! and aggregate the predictions into a character network.
//!
//! Modules follow the pipeline stages:
//!
//! - [`corpus`]: data model, JSONL persistence, splitting, anonymization,
//!   balancing, statistics, fine-tune export
//! - [`dialogue`]: segmentation of raw text and dialogue rendering variants
//! - [`prompting`]: prompt construction/rendering and response parsing
//! - [`retrieval`]: embeddings, exact Top-K index, exemplar selection
//! - [`inference`]: chat backends with retry and bounded parallelism
//! - [`evaluation`]: per-dimension weighted F1 and ablation grids
//! - [`network`]: polarity-weighted character graphs and exports
//! - [`pipeline`]: one-call extraction runs shared by the CLI and ablation

pub mod corpus;
pub mod dialogue;
pub mod evaluation;
pub mod inference;
pub mod network;
pub mod pipeline;
pub mod prompting;
pub mod retrieval;

pub use corpus::{
    load_dataset, save_dataset, CorpusError, Dataset, DialogueUnit, Dimension, Hierarchy,
    LabelMap, LabelSet, Polarity, Quote, RelType, RelationInstance, RelationLabel, SplitSpec,
};
pub use dialogue::{DialogueVariant, Locale};
pub use evaluation::EvalReport;
pub use inference::{BackendConfig, PredictionRecord};
pub use network::CharacterNetwork;
pub use pipeline::PipelineError;
pub use prompting::{PromptConfig, PromptMode};
pub use retrieval::{Embedder, EmbeddingVector, RetrievalIndex};
