//! Sequence tagger for location-indicating clues.
//!
//! A Bi-LSTM encoder feeds a Bi-LSTM decoder and a softmax output layer; the
//! training loss is a per-tag weighted cross-entropy whose weights adapt to
//! validation F1 after each epoch, pushing the model toward the tag types it
//! extracts worst. Decoding maps BIESO tag sequences to typed entities.

pub mod checkpoint;
pub mod corpus;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod preprocess;
pub mod scheme;
pub mod synth;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use corpus::{read_corpus, write_corpus, LabeledPage};
pub use loss::{adaptive_loss, update_weights, AdaptiveWeights};
pub use metrics::{compute_metrics, ExtractionMetrics};
pub use model::{CellState, TaggerParams, TokenizedPage};
pub use preprocess::{preprocess_page, tokenize, GoldClues};
pub use scheme::{decode_bieso, encode_bieso, EntityType, LocationEntity, Position, Tag};
pub use train::{train, TrainConfig, TrainError, TrainReport};
