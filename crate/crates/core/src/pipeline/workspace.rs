use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::manifest::{DatasetManifest, ExportRecord};
use crate::model::content_hash;

/// Output directory of a pipeline run. Remembers the artifacts of the
/// previous run so stages whose inputs are unchanged are not recomputed.
pub struct Workspace {
    root: PathBuf,
    previous: Option<DatasetManifest>,
    records: Vec<ExportRecord>,
    executed: Vec<String>,
    skipped: Vec<String>,
}

pub const MANIFEST_FILE: &str = "manifest.jsonl";

impl Workspace {
    pub fn open(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        let manifest = root.join(MANIFEST_FILE);
        let previous = if manifest.is_file() {
            match DatasetManifest::load(&manifest) {
                Ok(m) => Some(m),
                Err(e) => {
                    log::warn!("ignoring unreadable previous manifest: {e}");
                    None
                }
            }
        } else {
            None
        };
        Ok(Workspace {
            root: root.to_path_buf(),
            previous,
            records: Vec::new(),
            executed: Vec::new(),
            skipped: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn cached(&self, name: &str, file: &str, input_digest: &str) -> Option<String> {
        let record = self.previous.as_ref()?.export(name)?;
        if record.path != file || record.input_digest.as_deref() != Some(input_digest) {
            return None;
        }
        let text = std::fs::read_to_string(self.root.join(file)).ok()?;
        (content_hash(&text) == record.digest).then_some(text)
    }

    /// Returns the artifact text of stage `name`, reusing the previous run's
    /// file when it was built from the same `input_digest` and is intact.
    /// `compute` returns the artifact text and its record count.
    pub fn stage(
        &mut self,
        name: &'static str,
        file: &str,
        input_digest: &str,
        compute: impl FnOnce() -> Result<(String, usize)>,
    ) -> Result<String> {
        let wrap = |source: Error| Error::Stage {
            stage: name,
            source: Box::new(source),
        };
        if let Some(text) = self.cached(name, file, input_digest) {
            let record = self.previous.as_ref().and_then(|m| m.export(name)).cloned().expect("cached record");
            log::info!("{name}: unchanged, reusing {file}");
            self.records.push(record);
            self.skipped.push(name.to_string());
            return Ok(text);
        }
        log::info!("{name}: running");
        let (text, count) = compute().map_err(wrap)?;
        crate::io::write_atomic(&self.root.join(file), text.as_bytes()).map_err(wrap)?;
        self.records.push(ExportRecord {
            name: name.to_string(),
            path: file.to_string(),
            digest: content_hash(&text),
            input_digest: Some(input_digest.to_string()),
            count,
        });
        self.executed.push(name.to_string());
        Ok(text)
    }

    pub fn digest_of(&self, name: &str) -> Option<&str> {
        self.records.iter().find(|r| r.name == name).map(|r| r.digest.as_str())
    }

    pub fn records(&self) -> &[ExportRecord] {
        &self.records
    }

    pub fn executed(&self) -> &[String] {
        &self.executed
    }

    pub fn skipped(&self) -> &[String] {
        &self.skipped
    }
}
