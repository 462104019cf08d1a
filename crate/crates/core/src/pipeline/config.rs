use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{FilterOptions, MlmOptions, Seq2SeqOptions, SplitOptions};
use crate::error::{Error, Result};
use crate::lint::LintConfig;
use crate::model::{Origin, TrainingStrategy};
use crate::pairs::MineOptions;
use crate::preprocess::CleanOptions;
use crate::tokenizer::{BASE_VOCAB_SIZE, DEFAULT_VOCAB_SIZE};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    /// Directory or single file; relative paths resolve against the config
    /// file's directory.
    pub path: PathBuf,
    pub origin: Origin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerConfig {
    pub vocab_size: usize,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            vocab_size: DEFAULT_VOCAB_SIZE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    pub sources: Vec<SourceConfig>,
    #[serde(default)]
    pub strategy: TrainingStrategy,
    #[serde(default)]
    pub clean: CleanOptions,
    #[serde(default)]
    pub lint: LintConfig,
    #[serde(default)]
    pub mine: MineOptions,
    #[serde(default)]
    pub filter: FilterOptions,
    #[serde(default)]
    pub split: SplitOptions,
    #[serde(default)]
    pub tokenizer: TokenizerConfig,
    #[serde(default)]
    pub mlm: MlmOptions,
    #[serde(default)]
    pub seq2seq: Seq2SeqOptions,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl PipelineConfig {
    /// Config with default settings for the given sources.
    pub fn new(sources: Vec<SourceConfig>, out_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            seed: 0,
            out_dir: out_dir.into(),
            sources,
            strategy: TrainingStrategy::default(),
            clean: CleanOptions::default(),
            lint: LintConfig::default(),
            mine: MineOptions::default(),
            filter: FilterOptions::default(),
            split: SplitOptions::default(),
            tokenizer: TokenizerConfig::default(),
            mlm: MlmOptions::default(),
            seq2seq: Seq2SeqOptions::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Parses, validates and resolves relative paths against the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve(base);
        Ok(config)
    }

    pub fn resolve(&mut self, base: &Path) {
        if self.out_dir.is_relative() {
            self.out_dir = base.join(&self.out_dir);
        }
        for source in &mut self.sources {
            if source.path.is_relative() {
                source.path = base.join(&source.path);
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.sources.is_empty() {
            return fail("at least one [[sources]] entry is required".into());
        }
        self.strategy.validate()?;
        if self.tokenizer.vocab_size < BASE_VOCAB_SIZE {
            return fail(format!(
                "tokenizer.vocab_size {} is below the {BASE_VOCAB_SIZE} base symbols",
                self.tokenizer.vocab_size
            ));
        }
        let mlm = &self.mlm;
        if mlm.chunk_len == 0 {
            return fail("mlm.chunk_len must be positive".into());
        }
        if !(mlm.noise_density > 0.0 && mlm.noise_density < 1.0) {
            return fail(format!("mlm.noise_density {} must be in (0, 1)", mlm.noise_density));
        }
        if mlm.max_span == 0 || !(mlm.mean_span >= 1.0 && mlm.mean_span < (mlm.max_span as f64 + 1.0) / 2.0) {
            return fail(format!(
                "mlm.mean_span {} must be at least 1 and below the midpoint of 1..={}",
                mlm.mean_span, mlm.max_span
            ));
        }
        if self.seq2seq.max_input_ids == 0 || self.seq2seq.max_output_ids == 0 {
            return fail("seq2seq id limits must be positive".into());
        }
        if !(0.0..1.0).contains(&self.split.tolerance) || self.split.max_attempts == 0 {
            return fail("split.tolerance must be in [0, 1) and split.max_attempts positive".into());
        }
        if self.lint.max_line_length == 0 {
            return fail("lint.max_line_length must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FileFilter;

    const MINIMAL: &str = r#"
seed = 7

[[sources]]
path = "corpus"
origin = "primary-proprietary"
"#;

    #[test]
    fn defaults_fill_in() {
        let c = PipelineConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.mlm, MlmOptions::default());
        assert_eq!(c.out_dir, PathBuf::from("out"));
        let back = PipelineConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn every_strategy_is_expressible() {
        for strategy in TrainingStrategy::enumerate() {
            let mut c = PipelineConfig::from_toml(MINIMAL).unwrap();
            c.strategy = strategy;
            assert_eq!(PipelineConfig::from_toml(&c.to_toml()).unwrap().strategy, strategy);
        }
        let text = format!(
            "{MINIMAL}\n[strategy]\nself_supervised = true\nfile_filter = \"lint-iq-ge-10\"\nkeep_comments = false\nsupervised = false\ndeduplicated = false\n"
        );
        assert_eq!(PipelineConfig::from_toml(&text).unwrap().strategy.file_filter, FileFilter::LintIqGe10);
    }

    #[test]
    fn schema_violations() {
        let bad = [
            format!("{MINIMAL}\nunknown = 1\n"),
            format!("{MINIMAL}\n[mlm]\nnoise_density = 1.5\n"),
            format!("{MINIMAL}\n[mlm]\nmasking = 0.1\n"),
            format!("{MINIMAL}\n[tokenizer]\nvocab_size = 10\n"),
            "seed = 1\nsources = []\n".to_string(),
            format!("{MINIMAL}\n[strategy]\nself_supervised = false\nfile_filter = \"none\"\nkeep_comments = true\nsupervised = false\ndeduplicated = false\n"),
            MINIMAL.replace("primary-proprietary", "tertiary"),
        ];
        for text in bad {
            assert!(matches!(PipelineConfig::from_toml(&text), Err(Error::Config(_))), "{text}");
        }
    }
}
