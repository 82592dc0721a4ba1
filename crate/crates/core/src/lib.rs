//! Emotion style transfer by lexical substitution.
//!
//! A sentence is tokenized and tagged, a few positions are selected, each is
//! replaced by candidates from WordNet or an embedding space, and every
//! resulting variation is scored on target emotion, similarity to the input
//! and fluency. The best-scoring variation wins.

pub mod embed;
pub mod emolex;
pub mod emotion;
pub mod harness;
pub mod lm;
pub mod scoring;
pub mod synth;
pub mod text;
pub mod transfer;
pub mod wordnet;

pub use emotion::{Emotion, PerEmotion, NUM_EMOTIONS};
pub use transfer::{transfer, PipelineConfig, Resources, TransferOutcome, TransferResult};
