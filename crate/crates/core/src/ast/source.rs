// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// A loaded source file. Shared by every [`SourceSection`] pointing into it.
#[derive(Debug, PartialEq, Eq)]
pub struct SourceFile {
    pub path: PathBuf,
    pub text: String,
}

impl SourceFile {
    pub fn new(path: impl Into<PathBuf>, text: impl Into<String>) -> Arc<Self> {
        Arc::new(SourceFile {
            path: path.into(),
            text: text.into(),
        })
    }
}

/// Byte range into a [`SourceFile`].
#[derive(Clone, PartialEq, Eq)]
pub struct SourceSection {
    file: Arc<SourceFile>,
    pub start: usize,
    pub end: usize,
}

impl SourceSection {
    pub fn new(file: Arc<SourceFile>, start: usize, end: usize) -> Self {
        debug_assert!(start <= end && end <= file.text.len());
        SourceSection { file, start, end }
    }

    pub fn path(&self) -> &Path {
        &self.file.path
    }

    pub fn file(&self) -> &Arc<SourceFile> {
        &self.file
    }

    pub fn text(&self) -> &str {
        &self.file.text[self.start..self.end]
    }

    /// Smallest section covering both.
    pub fn join(&self, other: &SourceSection) -> SourceSection {
        SourceSection {
            file: self.file.clone(),
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }
}

impl fmt::Debug for SourceSection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}..{}]", self.file.path.display(), self.start, self.end)
    }
}
