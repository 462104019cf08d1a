//! Byte-level pair-merge subword tokenizer.
//!
//! Id layout: `0` pad, `1` end of sequence, `2` unknown, `3..103` the 100
//! sentinels, `103..359` the 256 raw bytes, then one id per merge in rank
//! order. Any byte sequence encodes without unknowns.

use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const PAD_ID: u32 = 0;
pub const EOS_ID: u32 = 1;
pub const UNK_ID: u32 = 2;
pub const NUM_SENTINELS: u32 = 100;
pub const SENTINEL_BASE: u32 = 3;
pub const BYTE_BASE: u32 = SENTINEL_BASE + NUM_SENTINELS;
/// Ids taken before any merge is learned.
pub const BASE_VOCAB_SIZE: usize = (BYTE_BASE + 256) as usize;
pub const DEFAULT_VOCAB_SIZE: usize = 8000;

const FORMAT_HEADER: &str = "#skill-bpe v1";
const SPECIALS_HEADER: &str = "#specials";

#[derive(Debug, thiserror::Error)]
pub enum TokenizerError {
    #[error("vocab size {requested} is below the {base} base symbols")]
    VocabTooSmall { requested: usize, base: usize },
    #[error("cannot train on an empty corpus")]
    EmptyCorpus,
    #[error("id {0} is not in the vocabulary")]
    UnknownId(u32),
    #[error("sentinel index {0} out of range")]
    SentinelOutOfRange(u32),
    #[error("vocab file line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub fn sentinel_id(n: u32) -> std::result::Result<u32, TokenizerError> {
    if n < NUM_SENTINELS {
        Ok(SENTINEL_BASE + n)
    } else {
        Err(TokenizerError::SentinelOutOfRange(n))
    }
}

pub fn is_sentinel(id: u32) -> bool {
    (SENTINEL_BASE..BYTE_BASE).contains(&id)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubwordVocab {
    merges: Vec<(u32, u32)>,
    /// Byte content of every non-special id, indexed by `id - BYTE_BASE`.
    pieces: Vec<Vec<u8>>,
    ranks: HashMap<(u32, u32), u32>,
    lookup: HashMap<Vec<u8>, u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum CharClass {
    Word,
    Space,
    Other,
}

fn class(b: u8) -> CharClass {
    if b.is_ascii_alphanumeric() || b == b'_' {
        CharClass::Word
    } else if b.is_ascii_whitespace() {
        CharClass::Space
    } else {
        CharClass::Other
    }
}

/// Splits text into runs of word characters, whitespace and other bytes.
/// Merges never cross these boundaries.
fn pre_split(text: &[u8]) -> impl Iterator<Item = &[u8]> {
    let mut start = 0;
    std::iter::from_fn(move || {
        if start >= text.len() {
            return None;
        }
        let c = class(text[start]);
        let len = text[start..].iter().take_while(|&&b| class(b) == c).count();
        let piece = &text[start..start + len];
        start += len;
        Some(piece)
    })
}

impl SubwordVocab {
    fn from_merges(merges: Vec<(u32, u32)>) -> std::result::Result<Self, TokenizerError> {
        let mut pieces: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
        let mut ranks = HashMap::new();
        for (rank, &(a, b)) in merges.iter().enumerate() {
            let next_id = BYTE_BASE + pieces.len() as u32;
            let get = |id: u32| {
                id.checked_sub(BYTE_BASE)
                    .filter(|&i| (i as usize) < pieces.len() && id < next_id)
                    .map(|i| pieces[i as usize].clone())
                    .ok_or(TokenizerError::UnknownId(id))
            };
            let mut joined = get(a)?;
            joined.extend(get(b)?);
            pieces.push(joined);
            ranks.insert((a, b), rank as u32);
        }
        let mut lookup = HashMap::new();
        for (i, p) in pieces.iter().enumerate() {
            lookup.entry(p.clone()).or_insert(BYTE_BASE + i as u32);
        }
        Ok(SubwordVocab {
            merges,
            pieces,
            ranks,
            lookup,
        })
    }

    pub fn len(&self) -> usize {
        BYTE_BASE as usize + self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn merges(&self) -> &[(u32, u32)] {
        &self.merges
    }

    /// Id of a token given by its text, specials included.
    pub fn token_id(&self, token: &str) -> Option<u32> {
        match token {
            "<pad>" => return Some(PAD_ID),
            "</s>" => return Some(EOS_ID),
            "<unk>" => return Some(UNK_ID),
            _ => {}
        }
        if let Some(n) = token
            .strip_prefix("<extra_id_")
            .and_then(|r| r.strip_suffix('>'))
            .and_then(|n| n.parse::<u32>().ok())
        {
            return sentinel_id(n).ok();
        }
        self.lookup.get(token.as_bytes()).copied()
    }

    pub fn token_bytes(&self, id: u32) -> std::result::Result<Vec<u8>, TokenizerError> {
        match id {
            PAD_ID => Ok(b"<pad>".to_vec()),
            EOS_ID => Ok(b"</s>".to_vec()),
            UNK_ID => Ok(b"<unk>".to_vec()),
            id if is_sentinel(id) => Ok(format!("<extra_id_{}>", id - SENTINEL_BASE).into_bytes()),
            id => self
                .pieces
                .get((id - BYTE_BASE) as usize)
                .cloned()
                .ok_or(TokenizerError::UnknownId(id)),
        }
    }

    fn encode_piece(&self, piece: &[u8], out: &mut Vec<u32>) {
        let mut ids: Vec<u32> = piece.iter().map(|&b| BYTE_BASE + u32::from(b)).collect();
        while ids.len() > 1 {
            let best = ids
                .windows(2)
                .enumerate()
                .filter_map(|(i, w)| self.ranks.get(&(w[0], w[1])).map(|r| (*r, i)))
                .min();
            let Some((rank, _)) = best else { break };
            let (a, b) = self.merges[rank as usize];
            let merged = BYTE_BASE + 256 + rank;
            let mut next = Vec::with_capacity(ids.len());
            let mut i = 0;
            while i < ids.len() {
                if i + 1 < ids.len() && ids[i] == a && ids[i + 1] == b {
                    next.push(merged);
                    i += 2;
                } else {
                    next.push(ids[i]);
                    i += 1;
                }
            }
            ids = next;
        }
        out.extend(ids);
    }

    pub fn encode(&self, text: &str) -> Vec<u32> {
        let mut out = Vec::new();
        for piece in pre_split(text.as_bytes()) {
            self.encode_piece(piece, &mut out);
        }
        out
    }

    /// Text of the ids; specials render as `<pad>`, `</s>`, `<unk>` and
    /// `<extra_id_N>`.
    pub fn decode(&self, ids: &[u32]) -> Result<String> {
        let mut bytes = Vec::new();
        for &id in ids {
            bytes.extend(self.token_bytes(id)?);
        }
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }

    /// Token strings of `text`, used as the units for BLEU.
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        self.encode(text)
            .into_iter()
            .map(|id| {
                String::from_utf8_lossy(&self.token_bytes(id).expect("encoded ids are known")).into_owned()
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{FORMAT_HEADER}").unwrap();
        for &(a, b) in &self.merges {
            let a = escape(&self.token_bytes(a).expect("merge ids are known"));
            let b = escape(&self.token_bytes(b).expect("merge ids are known"));
            writeln!(out, "{a} {b}").unwrap();
        }
        writeln!(out, "{SPECIALS_HEADER}").unwrap();
        writeln!(out, "pad {PAD_ID} <pad>").unwrap();
        writeln!(out, "eos {EOS_ID} </s>").unwrap();
        writeln!(out, "unk {UNK_ID} <unk>").unwrap();
        writeln!(out, "sentinels {SENTINEL_BASE} {NUM_SENTINELS} <extra_id_N>").unwrap();
        out
    }

    pub fn from_text(text: &str) -> std::result::Result<Self, TokenizerError> {
        let parse_err = |line: usize, message: &str| TokenizerError::Parse {
            line: line + 1,
            message: message.to_string(),
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, FORMAT_HEADER)) => {}
            _ => return Err(parse_err(0, "missing format header")),
        }
        let mut lookup: HashMap<Vec<u8>, u32> =
            (0..=255u8).map(|b| (vec![b], BYTE_BASE + u32::from(b))).collect();
        let mut merges = Vec::new();
        let mut specials = Vec::new();
        let mut in_specials = false;
        for (idx, line) in lines {
            if line == SPECIALS_HEADER {
                in_specials = true;
                continue;
            }
            if in_specials {
                specials.push(line.to_string());
                continue;
            }
            let (a, b) = line
                .split_once(' ')
                .ok_or_else(|| parse_err(idx, "expected two tokens"))?;
            let a = unescape(a).ok_or_else(|| parse_err(idx, "bad escape"))?;
            let b = unescape(b).ok_or_else(|| parse_err(idx, "bad escape"))?;
            let ida = *lookup.get(&a).ok_or_else(|| parse_err(idx, "unknown left token"))?;
            let idb = *lookup.get(&b).ok_or_else(|| parse_err(idx, "unknown right token"))?;
            let mut joined = a;
            joined.extend(b);
            let new_id = BYTE_BASE + 256 + merges.len() as u32;
            lookup.entry(joined).or_insert(new_id);
            merges.push((ida, idb));
        }
        let expected = [
            format!("pad {PAD_ID} <pad>"),
            format!("eos {EOS_ID} </s>"),
            format!("unk {UNK_ID} <unk>"),
            format!("sentinels {SENTINEL_BASE} {NUM_SENTINELS} <extra_id_N>"),
        ];
        if specials != expected {
            return Err(parse_err(text.lines().count(), "unexpected specials block"));
        }
        SubwordVocab::from_merges(merges)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(SubwordVocab::from_text(&text)?)
    }
}

/// Printable bytes other than space and backslash stay as they are; the
/// rest become `\xHH`.
fn escape(bytes: &[u8]) -> String {
    let mut out = String::new();
    for &b in bytes {
        if b.is_ascii_graphic() && b != b'\\' {
            out.push(b as char);
        } else {
            write!(out, "\\x{b:02x}").unwrap();
        }
    }
    out
}

fn unescape(text: &str) -> Option<Vec<u8>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'\\' {
            let hex = text.get(i + 2..i + 4)?;
            if bytes.get(i + 1) != Some(&b'x') {
                return None;
            }
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 4;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    (!out.is_empty()).then_some(out)
}

/// Learns merges greedily: the most frequent adjacent pair is merged until
/// the vocabulary reaches `vocab_size` or no pair occurs twice. Ties go to
/// the smallest pair of ids.
pub fn train_tokenizer<S: AsRef<str>>(texts: &[S], vocab_size: usize) -> Result<SubwordVocab> {
    if vocab_size < BASE_VOCAB_SIZE {
        return Err(TokenizerError::VocabTooSmall {
            requested: vocab_size,
            base: BASE_VOCAB_SIZE,
        }
        .into());
    }
    let mut word_counts: HashMap<&[u8], i64> = HashMap::new();
    let mut total = 0usize;
    for text in texts {
        for piece in pre_split(text.as_ref().as_bytes()) {
            *word_counts.entry(piece).or_default() += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(TokenizerError::EmptyCorpus.into());
    }
    let mut sorted: Vec<(&[u8], i64)> = word_counts.into_iter().collect();
    sorted.sort_unstable();
    let mut words: Vec<Vec<u32>> = sorted
        .iter()
        .map(|(w, _)| w.iter().map(|&b| BYTE_BASE + u32::from(b)).collect())
        .collect();
    let freqs: Vec<i64> = sorted.iter().map(|(_, c)| *c).collect();

    let mut counts: HashMap<(u32, u32), i64> = HashMap::new();
    let mut where_: HashMap<(u32, u32), HashSet<usize>> = HashMap::new();
    for (wi, word) in words.iter().enumerate() {
        for w in word.windows(2) {
            *counts.entry((w[0], w[1])).or_default() += freqs[wi];
            where_.entry((w[0], w[1])).or_default().insert(wi);
        }
    }
    let mut queue: BTreeSet<(i64, Reverse<(u32, u32)>)> =
        counts.iter().map(|(&p, &c)| (c, Reverse(p))).collect();

    let mut merges = Vec::new();
    while BASE_VOCAB_SIZE + merges.len() < vocab_size {
        let Some(&(count, Reverse(pair))) = queue.last() else {
            break;
        };
        if count < 2 {
            break;
        }
        let new_id = BYTE_BASE + 256 + merges.len() as u32;
        merges.push(pair);
        let affected: Vec<usize> = where_.remove(&pair).unwrap_or_default().into_iter().collect();
        let mut delta: HashMap<(u32, u32), i64> = HashMap::new();
        for wi in affected {
            let word = &words[wi];
            let freq = freqs[wi];
            for w in word.windows(2) {
                *delta.entry((w[0], w[1])).or_default() -= freq;
            }
            let mut next = Vec::with_capacity(word.len());
            let mut i = 0;
            while i < word.len() {
                if i + 1 < word.len() && (word[i], word[i + 1]) == pair {
                    next.push(new_id);
                    i += 2;
                } else {
                    next.push(word[i]);
                    i += 1;
                }
            }
            for w in next.windows(2) {
                *delta.entry((w[0], w[1])).or_default() += freq;
                where_.entry((w[0], w[1])).or_default().insert(wi);
            }
            words[wi] = next;
        }
        for (p, d) in delta {
            if d == 0 {
                continue;
            }
            let old = counts.get(&p).copied().unwrap_or(0);
            let new = old + d;
            queue.remove(&(old, Reverse(p)));
            if new > 0 {
                counts.insert(p, new);
                queue.insert((new, Reverse(p)));
            } else {
                counts.remove(&p);
            }
        }
        queue.remove(&(count, Reverse(pair)));
        counts.remove(&pair);
    }
    Ok(SubwordVocab::from_merges(merges)?)
}
