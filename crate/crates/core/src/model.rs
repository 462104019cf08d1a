//! Shared domain types.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lint::LintReport;

/// Hex-encoded SHA-256 of the exact byte sequence.
pub fn content_hash(text: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(text.as_ref()))
}

/// Hash of several fields, each length-prefixed so that field boundaries
/// cannot be shifted to produce a collision.
pub fn hash_fields<I, T>(fields: I) -> String
where
    I: IntoIterator<Item = T>,
    T: AsRef<[u8]>,
{
    let mut hasher = Sha256::new();
    for field in fields {
        let bytes = field.as_ref();
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(bytes);
    }
    hex::encode(hasher.finalize())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    PrimaryProprietary,
    SecondaryProprietary,
    RepoSearch,
    CodeSearch,
}

impl Origin {
    pub const ALL: [Origin; 4] = [
        Origin::PrimaryProprietary,
        Origin::SecondaryProprietary,
        Origin::RepoSearch,
        Origin::CodeSearch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Origin::PrimaryProprietary => "primary-proprietary",
            Origin::SecondaryProprietary => "secondary-proprietary",
            Origin::RepoSearch => "repo-search",
            Origin::CodeSearch => "code-search",
        }
    }

    pub fn is_primary(self) -> bool {
        self == Origin::PrimaryProprietary
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Origin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Origin::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown origin `{s}`")))
    }
}

/// Half-open byte range into an owning text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end, "span start {start} after end {end}");
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn cover(&self, other: &Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }

    /// Slices `text`, failing if the span does not index into it on char
    /// boundaries.
    pub fn slice<'a>(&self, text: &'a str) -> Result<&'a str> {
        text.get(self.start..self.end)
            .filter(|_| self.start <= self.end)
            .ok_or(Error::SpanOutOfBounds {
                span: *self,
                len: text.len(),
            })
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub id: String,
    pub origin: Origin,
    pub path: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lint: Option<LintReport>,
}

impl SourceFile {
    pub fn new(origin: Origin, path: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        SourceFile {
            id: content_hash(&text),
            origin,
            path: path.into(),
            text,
            lint: None,
        }
    }

    /// Same path and origin, new text (and therefore new id). Any lint
    /// report is dropped because it no longer describes the text.
    pub fn with_text(&self, text: impl Into<String>) -> Self {
        SourceFile::new(self.origin, self.path.clone(), text)
    }

    pub fn lint_report(&self) -> LintReport {
        match &self.lint {
            Some(report) => report.clone(),
            None => crate::lint::lint_file(&self.text),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PairKind {
    /// Comment + definition header → body.
    CF,
    /// Comment → following statement or construct.
    CC,
    /// Definition header (optionally plus leading statements) → body.
    FC,
}

impl PairKind {
    pub const ALL: [PairKind; 3] = [PairKind::CF, PairKind::CC, PairKind::FC];

    pub fn as_str(self) -> &'static str {
        match self {
            PairKind::CF => "CF",
            PairKind::CC => "CC",
            PairKind::FC => "FC",
        }
    }
}

impl fmt::Display for PairKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair {
    pub id: String,
    pub file_id: String,
    pub kind: PairKind,
    pub input_span: Span,
    pub output_span: Span,
    pub input_text: String,
    /// Text between input and output: whitespace, plus any comments that
    /// open the body.
    #[serde(default)]
    pub gap_text: String,
    pub output_text: String,
    pub top_level: bool,
    /// Function-completion pair whose input also carries the first part of
    /// a long body.
    #[serde(default)]
    pub partial_body: bool,
}

impl Pair {
    /// Input, gap and output as they appear in the file.
    pub fn region_text(&self) -> String {
        format!("{}{}{}", self.input_text, self.gap_text, self.output_text)
    }

    pub fn new(file: &SourceFile, kind: PairKind, input_span: Span, output_span: Span) -> Result<Self> {
        if input_span.end > output_span.start {
            return Err(Error::InvalidInput(format!(
                "input span {input_span} does not precede output span {output_span}"
            )));
        }
        let input_text = input_span.slice(&file.text)?.to_string();
        let output_text = output_span.slice(&file.text)?.to_string();
        let gap_text = file.text[input_span.end..output_span.start].to_string();
        let id = hash_fields([
            file.id.as_str(),
            kind.as_str(),
            &input_span.to_string(),
            &output_span.to_string(),
        ]);
        Ok(Pair {
            id,
            file_id: file.id.clone(),
            kind,
            input_span,
            output_span,
            input_text,
            gap_text,
            output_text,
            top_level: true,
            partial_body: false,
        })
    }

    /// Output code with comments removed; this is the reference a model is
    /// scored against.
    pub fn reference_output(&self) -> String {
        crate::preprocess::strip_comments(&self.output_text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FileFilter {
    None,
    LintPass,
    #[serde(rename = "lint-iq-ge-10")]
    LintIqGe10,
    HasPairs,
}

impl FileFilter {
    pub const ALL: [FileFilter; 4] = [
        FileFilter::None,
        FileFilter::LintPass,
        FileFilter::LintIqGe10,
        FileFilter::HasPairs,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingStrategy {
    pub self_supervised: bool,
    pub file_filter: FileFilter,
    pub keep_comments: bool,
    pub supervised: bool,
    pub deduplicated: bool,
}

impl Default for TrainingStrategy {
    fn default() -> Self {
        TrainingStrategy {
            self_supervised: true,
            file_filter: FileFilter::None,
            keep_comments: true,
            supervised: true,
            deduplicated: true,
        }
    }
}

impl TrainingStrategy {
    /// Every meaningful combination. Flags that have no effect in a given
    /// combination are pinned to their defaults so that each entry is a
    /// distinct training run.
    pub fn enumerate() -> Vec<TrainingStrategy> {
        let mut out = Vec::new();
        let supervised_options = [(false, false), (true, false), (true, true)];
        for file_filter in FileFilter::ALL {
            for keep_comments in [true, false] {
                for (supervised, deduplicated) in supervised_options {
                    out.push(TrainingStrategy {
                        self_supervised: true,
                        file_filter,
                        keep_comments,
                        supervised,
                        deduplicated,
                    });
                }
            }
        }
        for deduplicated in [false, true] {
            out.push(TrainingStrategy {
                self_supervised: false,
                file_filter: FileFilter::None,
                keep_comments: true,
                supervised: true,
                deduplicated,
            });
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if !self.self_supervised && !self.supervised {
            return Err(Error::Config(
                "strategy trains nothing: enable self_supervised or supervised".into(),
            ));
        }
        if self.deduplicated && !self.supervised {
            return Err(Error::Config(
                "deduplicated only applies to supervised training".into(),
            ));
        }
        if !self.self_supervised && (self.file_filter != FileFilter::None || !self.keep_comments) {
            return Err(Error::Config(
                "file_filter/keep_comments only apply to self-supervised training".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_hash_is_fixed() {
        assert_eq!(
            content_hash(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn identical_texts_share_id() {
        let a = SourceFile::new(Origin::RepoSearch, "a.il", "x = 1\n");
        let b = SourceFile::new(Origin::CodeSearch, "b/c.il", "x = 1\n");
        assert_eq!(a.id, b.id);
    }

    #[test]
    fn trailing_newline_changes_id() {
        assert_ne!(content_hash("x = 1"), content_hash("x = 1\n"));
    }

    #[test]
    fn field_hash_respects_boundaries() {
        assert_ne!(hash_fields(["ab", "c"]), hash_fields(["a", "bc"]));
    }

    #[test]
    fn span_slice_checks_bounds() {
        assert_eq!(Span::new(1, 3).slice("abcd").unwrap(), "bc");
        assert!(Span::new(2, 9).slice("abcd").is_err());
    }

    #[test]
    fn pair_requires_ordered_spans() {
        let file = SourceFile::new(Origin::RepoSearch, "a.il", "abcdef");
        assert!(Pair::new(&file, PairKind::CC, Span::new(3, 5), Span::new(0, 2)).is_err());
        assert!(Pair::new(&file, PairKind::CC, Span::new(0, 3), Span::new(2, 5)).is_err());
        let pair = Pair::new(&file, PairKind::CC, Span::new(0, 2), Span::new(3, 6)).unwrap();
        assert_eq!(pair.input_text, "ab");
        assert_eq!(pair.output_text, "def");
    }

    #[test]
    fn strategy_enumeration() {
        let all = TrainingStrategy::enumerate();
        assert_eq!(all.iter().filter(|s| s.self_supervised).count(), 24);
        assert_eq!(all.len(), 26);
        for s in &all {
            s.validate().unwrap();
        }
        let distinct: std::collections::HashSet<_> = all.iter().collect();
        assert_eq!(distinct.len(), all.len());
    }

    #[test]
    fn origin_round_trips_through_str() {
        for origin in Origin::ALL {
            assert_eq!(origin.as_str().parse::<Origin>().unwrap(), origin);
        }
        assert!("github".parse::<Origin>().is_err());
    }
}
