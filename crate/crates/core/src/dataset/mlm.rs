use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng_for;
use crate::model::SourceFile;
use crate::tokenizer::{is_sentinel, sentinel_id, SubwordVocab, EOS_ID, NUM_SENTINELS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlmOptions {
    pub chunk_len: usize,
    pub noise_density: f64,
    pub mean_span: f64,
    pub max_span: usize,
    /// Emit the final chunk even when it is shorter than `chunk_len`.
    pub keep_partial: bool,
}

impl Default for MlmOptions {
    fn default() -> Self {
        MlmOptions {
            chunk_len: 512,
            noise_density: 0.15,
            mean_span: 3.0,
            max_span: 8,
            keep_partial: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlmSample {
    pub corrupted_ids: Vec<u32>,
    pub target_ids: Vec<u32>,
    /// Ids of the files whose tokens appear in the chunk, in order.
    pub sources: Vec<String>,
}

impl MlmSample {
    pub fn masked_tokens(&self) -> usize {
        self.target_ids.iter().filter(|&&id| !is_sentinel(id)).count()
    }

    pub fn chunk_len(&self) -> usize {
        self.corrupted_ids.iter().filter(|&&id| !is_sentinel(id)).count() + self.masked_tokens()
    }

    /// Lengths of the masked spans, in order.
    pub fn span_lengths(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for id in &self.target_ids {
            if is_sentinel(*id) {
                out.push(0);
            } else if let Some(last) = out.last_mut() {
                *last += 1;
            }
        }
        // The closing sentinel opens no span.
        if out.last() == Some(&0) {
            out.pop();
        }
        out
    }
}

/// Probabilities of span lengths `1..=max_span`: a geometric distribution
/// truncated to that range, with its parameter chosen so that the mean of
/// the truncated distribution is `mean`.
pub fn span_length_distribution(mean: f64, max_span: usize) -> Vec<f64> {
    let weights = |p: f64| -> Vec<f64> { (0..max_span).map(|k| (1.0 - p).powi(k as i32) * p).collect() };
    let mean_of = |p: f64| {
        let w = weights(p);
        let total: f64 = w.iter().sum();
        w.iter().enumerate().map(|(k, x)| (k + 1) as f64 * x).sum::<f64>() / total
    };
    // The truncated mean falls from (max_span + 1) / 2 towards 1 as p grows.
    let (mut lo, mut hi) = (1e-9, 1.0 - 1e-12);
    for _ in 0..200 {
        let mid = (lo + hi) / 2.0;
        if mean_of(mid) > mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let w = weights((lo + hi) / 2.0);
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Replaces non-adjacent spans of `chunk` with sentinels.
///
/// The span count is `round(noise_density * len / mean_span)`; lengths are
/// drawn from [`span_length_distribution`] and the unmasked tokens are
/// spread over the gaps uniformly at random, with at least one token
/// between consecutive spans.
pub fn corrupt_chunk<R: Rng>(chunk: &[u32], options: &MlmOptions, rng: &mut R) -> (Vec<u32>, Vec<u32>) {
    let len = chunk.len();
    let wanted = (options.noise_density * len as f64 / options.mean_span).round() as usize;
    let mut count = wanted.clamp(usize::from(len >= 2), NUM_SENTINELS as usize - 1);
    if len < 2 || count == 0 {
        return (chunk.to_vec(), Vec::new());
    }
    let dist = WeightedIndex::new(span_length_distribution(options.mean_span, options.max_span))
        .expect("valid weights");
    let mut lengths: Vec<usize> = (0..count).map(|_| dist.sample(rng) + 1).collect();
    // Short chunks: shrink until spans, separators and one kept token fit.
    while lengths.iter().sum::<usize>() + count > len {
        match lengths.iter().enumerate().filter(|(_, &l)| l > 1).max_by_key(|(i, &l)| (l, *i)) {
            Some((i, _)) => lengths[i] -= 1,
            None => {
                lengths.pop();
                count -= 1;
            }
        }
    }
    let masked: usize = lengths.iter().sum();
    // Gaps: g_0 >= 0, g_1..g_{count-1} >= 1, g_count >= 0, summing to the
    // unmasked total. Sampling bars uniformly gives a uniform composition.
    let free = len - masked - (count - 1);
    let mut bars = rand::seq::index::sample(rng, free + count, count).into_vec();
    bars.sort_unstable();
    let mut gaps = Vec::with_capacity(count + 1);
    let mut prev: isize = -1;
    for &b in &bars {
        gaps.push((b as isize - prev - 1) as usize);
        prev = b as isize;
    }
    gaps.push(free + count - 1 - bars[count - 1]);
    for g in gaps.iter_mut().take(count).skip(1) {
        *g += 1;
    }

    let mut corrupted = Vec::with_capacity(len - masked + count);
    let mut targets = Vec::with_capacity(masked + count + 1);
    let mut pos = 0;
    for (i, &span) in lengths.iter().enumerate() {
        corrupted.extend_from_slice(&chunk[pos..pos + gaps[i]]);
        pos += gaps[i];
        let sentinel = sentinel_id(i as u32).expect("span count below sentinel count");
        corrupted.push(sentinel);
        targets.push(sentinel);
        targets.extend_from_slice(&chunk[pos..pos + span]);
        pos += span;
    }
    corrupted.extend_from_slice(&chunk[pos..]);
    targets.push(sentinel_id(count as u32).expect("span count below sentinel count"));
    (corrupted, targets)
}

/// Splices the targets back over the sentinels of a corrupted chunk.
pub fn reconstruct(corrupted: &[u32], targets: &[u32]) -> Vec<u32> {
    let mut spans: std::collections::HashMap<u32, &[u32]> = std::collections::HashMap::new();
    let mut i = 0;
    while i < targets.len() {
        let sentinel = targets[i];
        let end = targets[i + 1..]
            .iter()
            .position(|&id| is_sentinel(id))
            .map_or(targets.len(), |p| i + 1 + p);
        spans.insert(sentinel, &targets[i + 1..end]);
        i = end;
    }
    let mut out = Vec::new();
    for &id in corrupted {
        match spans.get(&id) {
            Some(span) if is_sentinel(id) => out.extend_from_slice(span),
            _ => out.push(id),
        }
    }
    out
}

/// Corrupts consecutive `chunk_len` windows of an already tokenized stream.
/// Each window gets its own RNG derived from the seed and window index.
pub fn build_mlm_samples_from_ids(
    ids: &[u32],
    owners: &[(usize, String)],
    seed: u64,
    options: &MlmOptions,
) -> Vec<MlmSample> {
    let chunk_len = options.chunk_len.max(1);
    let windows: Vec<(usize, &[u32])> = ids
        .chunks(chunk_len)
        .enumerate()
        .filter(|(_, c)| c.len() == chunk_len || options.keep_partial)
        .map(|(i, c)| (i * chunk_len, c))
        .collect();
    windows
        .into_par_iter()
        .map(|(start, chunk)| {
            let mut rng = rng_for(seed, "mlm", (start / chunk_len) as u64);
            let (corrupted_ids, target_ids) = corrupt_chunk(chunk, options, &mut rng);
            let end = start + chunk.len();
            // owners[i] = (first token offset, file id), ascending.
            let first = owners.partition_point(|(off, _)| *off <= start).saturating_sub(1);
            let sources = owners[first..]
                .iter()
                .take_while(|(off, _)| *off < end)
                .map(|(_, id)| id.clone())
                .collect();
            MlmSample {
                corrupted_ids,
                target_ids,
                sources,
            }
        })
        .collect()
}

/// Tokenizes every file, joins them with end-of-sequence separators and
/// corrupts each fixed-length window. Windows may cross file boundaries;
/// `sources` records which files a window covers.
pub fn build_mlm_samples(files: &[SourceFile], vocab: &SubwordVocab, seed: u64, options: &MlmOptions) -> Vec<MlmSample> {
    let encoded: Vec<Vec<u32>> = files.par_iter().map(|f| vocab.encode(&f.text)).collect();
    let mut ids = Vec::new();
    let mut owners = Vec::new();
    for (file, tokens) in files.iter().zip(encoded) {
        owners.push((ids.len(), file.id.clone()));
        ids.extend(tokens);
        ids.push(EOS_ID);
    }
    build_mlm_samples_from_ids(&ids, &owners, seed, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn distribution_has_requested_mean() {
        let d = span_length_distribution(3.0, 8);
        assert_eq!(d.len(), 8);
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mean: f64 = d.iter().enumerate().map(|(k, p)| (k + 1) as f64 * p).sum();
        assert!((mean - 3.0).abs() < 1e-9);
        assert!(d.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn full_chunk_has_26_spans() {
        let chunk: Vec<u32> = (0..512).map(|i| 400 + i).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (corrupted, targets) = corrupt_chunk(&chunk, &MlmOptions::default(), &mut rng);
        let sample = MlmSample {
            corrupted_ids: corrupted.clone(),
            target_ids: targets.clone(),
            sources: vec![],
        };
        let spans = sample.span_lengths();
        assert_eq!(spans.len(), 26);
        assert!(spans.iter().all(|&l| (1..=8).contains(&l)));
        assert_eq!(sample.masked_tokens(), spans.iter().sum::<usize>());
        assert_eq!(sample.chunk_len(), 512);
        assert_eq!(reconstruct(&corrupted, &targets), chunk);
        // Spans are separated by at least one kept token.
        assert!(corrupted.windows(2).all(|w| !(is_sentinel(w[0]) && is_sentinel(w[1]))));
    }

    #[test]
    fn short_chunks() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for len in 0..40u32 {
            let chunk: Vec<u32> = (0..len).map(|i| 400 + i).collect();
            let (c, t) = corrupt_chunk(&chunk, &MlmOptions::default(), &mut rng);
            assert_eq!(reconstruct(&c, &t), chunk);
            assert!(c.iter().any(|id| !is_sentinel(*id)) || chunk.is_empty());
        }
    }

    #[test]
    fn empty_corpus() {
        let vocab = crate::tokenizer::train_tokenizer(&["x = 1"], 400).unwrap();
        assert!(build_mlm_samples(&[], &vocab, 0, &MlmOptions::default()).is_empty());
    }

    #[test]
    fn sources_and_partial_chunks() {
        let owners = vec![(0, "a".to_string()), (300, "b".to_string()), (700, "c".to_string())];
        let ids: Vec<u32> = (0..1100).map(|i| 400 + i).collect();
        let samples = build_mlm_samples_from_ids(&ids, &owners, 3, &MlmOptions::default());
        assert_eq!(samples.len(), 3);
        assert_eq!(samples[0].sources, ["a", "b"]);
        assert_eq!(samples[1].sources, ["b", "c"]);
        assert_eq!(samples[2].sources, ["c"]);
        assert_eq!(samples[2].chunk_len(), 76);
        let full_only = MlmOptions {
            keep_partial: false,
            ..MlmOptions::default()
        };
        assert_eq!(build_mlm_samples_from_ids(&ids, &owners, 3, &full_only).len(), 2);
        assert_eq!(build_mlm_samples_from_ids(&ids, &owners, 3, &MlmOptions::default()), samples);
    }
}
