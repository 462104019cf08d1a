//! Training-set construction: file filtering, the balanced evaluation
//! split, and MLM / sequence-to-sequence exports.

mod filter;
mod mlm;
mod seq2seq;
mod split;

pub use filter::{filter_files, filter_files_with, FilterOptions};
pub use mlm::{
    build_mlm_samples, build_mlm_samples_from_ids, corrupt_chunk, reconstruct, span_length_distribution,
    MlmOptions, MlmSample,
};
pub use seq2seq::{build_seq2seq_samples, truncate_comment_words, Seq2SeqOptions, Seq2SeqSample};
pub use split::{make_splits, SplitError, SplitOptions, SplitOutcome};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent RNG stream for one purpose under a run seed.
pub(crate) fn rng_for(seed: u64, purpose: &str, index: u64) -> ChaCha8Rng {
    let digest = crate::model::hash_fields([
        seed.to_le_bytes().as_slice(),
        purpose.as_bytes(),
        index.to_le_bytes().as_slice(),
    ]);
    let mut bytes = [0u8; 32];
    hex::decode_to_slice(&digest, &mut bytes).expect("sha256 hex");
    ChaCha8Rng::from_seed(bytes)
}
