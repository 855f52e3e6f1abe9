use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Judge an explanation and give feedback if it is wrong.
    Annotation,
    /// Rewrite an existing feedback string.
    Paraphrase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Correct,
    Incorrect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub session_id: String,
    pub task_id: String,
    pub annotator_id: String,
    /// Absent for paraphrase tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(default)]
    pub feedback: String,
    /// Seconds since the Unix epoch, assigned by the server.
    pub timestamp: u64,
    pub elapsed_seconds: f64,
}

/// One line of the annotation log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum StoreEvent {
    Session {
        session_id: String,
        annotator_id: String,
        kind: TaskKind,
        seed: u64,
    },
    Annotation(AnnotationRecord),
}

/// Append-only log, one JSON event per line. Every append is flushed and
/// synced before it returns.
#[derive(Debug)]
pub struct Store {
    path: PathBuf,
    file: File,
}

impl Store {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(Store { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, event: &StoreEvent) -> Result<()> {
        let mut line = serde_json::to_string(event)?;
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.flush())
            .and_then(|_| self.file.sync_data())
            .map_err(|e| Error::io(&self.path, e))
    }

    /// Reads every event. A torn final line (no trailing newline, not valid
    /// JSON) is ignored; any other bad line is an error.
    pub fn replay(path: impl AsRef<Path>) -> Result<Vec<StoreEvent>> {
        let path = path.as_ref();
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(Error::io(path, e)),
        };
        let complete = text.ends_with('\n');
        let lines: Vec<&str> = text.lines().collect();
        let mut out = Vec::with_capacity(lines.len());
        for (i, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str(line) {
                Ok(ev) => out.push(ev),
                Err(_) if i + 1 == lines.len() && !complete => break,
                Err(e) => {
                    return Err(Error::InvalidRecord {
                        record: format!("{}:{}", path.display(), i + 1),
                        reason: e.to_string(),
                    })
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(task: &str) -> StoreEvent {
        StoreEvent::Annotation(AnnotationRecord {
            session_id: "s1".into(),
            task_id: task.into(),
            annotator_id: "ann".into(),
            verdict: Some(Verdict::Correct),
            feedback: String::new(),
            timestamp: 1,
            elapsed_seconds: 2.5,
        })
    }

    #[test]
    fn append_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log").join("store.jsonl");
        let mut s = Store::open(&path).unwrap();
        s.append(&record("a0")).unwrap();
        s.append(&record("a1")).unwrap();
        assert_eq!(Store::replay(&path).unwrap(), vec![record("a0"), record("a1")]);
    }

    #[test]
    fn torn_tail_is_ignored_but_corruption_is_not() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.jsonl");
        let good = serde_json::to_string(&record("a0")).unwrap();
        std::fs::write(&path, format!("{good}\n{{\"event\":\"annot")).unwrap();
        assert_eq!(Store::replay(&path).unwrap().len(), 1);
        std::fs::write(&path, format!("garbage\n{good}\n")).unwrap();
        assert!(Store::replay(&path).is_err());
        assert!(Store::replay(dir.path().join("missing")).unwrap().is_empty());
    }
}
