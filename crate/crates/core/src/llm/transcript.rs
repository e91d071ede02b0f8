use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ChatMessage, Completion, LanguageModel, LlmError, Usage};

/// One request/response pair as logged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub seq: u64,
    pub phase: String,
    pub messages: Vec<ChatMessage>,
    pub response: String,
    pub usage: Usage,
    pub latency_secs: f64,
}

/// Appends entries to a JSONL file, one line per request.
pub struct TranscriptWriter {
    path: PathBuf,
    file: File,
}

impl TranscriptWriter {
    /// Creates (or truncates) the file.
    pub fn create(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        Self::open(path.as_ref(), false)
    }

    /// Opens for appending, keeping earlier entries (used when resuming).
    pub fn append_to(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        Self::open(path.as_ref(), true)
    }

    fn open(path: &Path, append: bool) -> Result<Self, LlmError> {
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .append(append)
            .truncate(!append)
            .open(path)
            .map_err(|source| LlmError::Io {
                path: path.display().to_string(),
                source,
            })?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn append(&mut self, entry: &TranscriptEntry) -> Result<(), LlmError> {
        let line = serde_json::to_string(entry).expect("serializable") + "\n";
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(|source| LlmError::Io {
                path: self.path.display().to_string(),
                source,
            })
    }
}

pub fn read_transcript(path: impl AsRef<Path>) -> Result<Vec<TranscriptEntry>, LlmError> {
    let path = path.as_ref();
    let io = |source| LlmError::Io {
        path: path.display().to_string(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut entries = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(&line)
            .map_err(|e| LlmError::Replay(format!("{} line {}: {e}", path.display(), i + 1)))?;
        entries.push(entry);
    }
    Ok(entries)
}

/// Answers requests from a transcript, in order. Each request must match
/// the recorded one exactly.
pub struct ReplayModel {
    entries: Vec<TranscriptEntry>,
    position: usize,
}

impl ReplayModel {
    pub fn new(entries: Vec<TranscriptEntry>) -> Self {
        Self { entries, position: 0 }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        Ok(Self::new(read_transcript(path)?))
    }

    pub fn remaining(&self) -> usize {
        self.entries.len() - self.position
    }
}

impl LanguageModel for ReplayModel {
    fn complete(&mut self, messages: &[ChatMessage]) -> Result<Completion, LlmError> {
        let entry = self
            .entries
            .get(self.position)
            .ok_or_else(|| LlmError::Replay(format!("transcript exhausted after {} requests", self.position)))?;
        if entry.messages != messages {
            return Err(LlmError::Replay(format!(
                "request {} differs from the recorded one (phase {})",
                self.position, entry.phase
            )));
        }
        self.position += 1;
        Ok(Completion {
            text: entry.response.clone(),
            usage: entry.usage,
            latency_secs: entry.latency_secs,
        })
    }

    fn snapshot(&self) -> serde_json::Value {
        serde_json::json!({ "position": self.position })
    }

    fn restore(&mut self, state: &serde_json::Value) -> Result<(), LlmError> {
        let pos = state
            .get("position")
            .and_then(|p| p.as_u64())
            .ok_or_else(|| LlmError::State("replay snapshot lacks a position".into()))? as usize;
        if pos > self.entries.len() {
            return Err(LlmError::State(format!("position {pos} beyond transcript length")));
        }
        self.position = pos;
        Ok(())
    }

    fn describe(&self) -> String {
        format!("replay:{} entries", self.entries.len())
    }
}
