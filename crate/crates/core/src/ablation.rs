//! Frame-order and single-frame ablations applied to a real/AI corpus pair.

use crate::corpus::Corpus;
use crate::error::Result;
use crate::ranking::{shuffle_corpus, Pooling, ShuffleMode};
use crate::rng::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ablation {
    /// Shuffle the frames of both corpora.
    ShuffleAll,
    /// Shuffle only the AI corpus.
    ShuffleAi,
    /// Reverse the frame order of both corpora.
    Reverse,
    /// Retrieve with one frame per video; `None` picks the middle frame.
    SingleFrame(Option<usize>),
}

/// Corpora and pooling after an ablation.
#[derive(Clone, Debug)]
pub struct Ablated {
    pub real: Corpus,
    pub ai: Corpus,
    pub pooling: Pooling,
    /// The ablation cannot change any result under the chosen pooling.
    pub no_op: bool,
}

impl Ablation {
    /// Apply to corpora already resampled to `frames` frames per video.
    pub fn apply(self, real: &Corpus, ai: &Corpus, pooling: Pooling, frames: usize, seed: u64) -> Result<Ablated> {
        let shuffled = |c: &Corpus, label: &str| shuffle_corpus(c, ShuffleMode::Random(derive_seed(seed, label)));
        let order_matters = pooling.is_order_sensitive();
        Ok(match self {
            Ablation::ShuffleAll => Ablated {
                real: shuffled(real, "shuffle-real")?,
                ai: shuffled(ai, "shuffle-ai")?,
                pooling,
                no_op: !order_matters,
            },
            Ablation::ShuffleAi => Ablated {
                real: real.clone(),
                ai: shuffled(ai, "shuffle-ai")?,
                pooling,
                no_op: !order_matters,
            },
            Ablation::Reverse => Ablated {
                real: shuffle_corpus(real, ShuffleMode::Reverse)?,
                ai: shuffle_corpus(ai, ShuffleMode::Reverse)?,
                pooling,
                no_op: !order_matters,
            },
            Ablation::SingleFrame(k) => Ablated {
                real: real.clone(),
                ai: ai.clone(),
                pooling: match k {
                    Some(k) => Pooling::SingleFrame(k),
                    None => Pooling::middle_frame(frames),
                },
                no_op: false,
            },
        })
    }
}
