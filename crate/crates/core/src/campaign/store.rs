//! Append-only JSONL attempt log. One record per line, flushed per append, so
//! a killed run resumes from whatever made it to disk.

use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use crate::campaign::AttemptRecord;

pub struct RecordStore {
    path: PathBuf,
    writer: Mutex<File>,
    records: Mutex<Vec<AttemptRecord>>,
    skipped_lines: usize,
}

impl RecordStore {
    /// Opens (creating if needed) the log and loads every parsable line.
    /// A trailing half-written line from a killed run is skipped; duplicate
    /// (behavior, target, shot) entries keep the first occurrence.
    pub fn open(path: impl Into<PathBuf>) -> std::io::Result<Self> {
        let path = path.into();
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut records: Vec<AttemptRecord> = Vec::new();
        let mut skipped_lines = 0;
        let mut needs_newline_repair = false;
        if path.exists() {
            let text = std::fs::read_to_string(&path)?;
            // A killed run can leave a torn final line; quarantine it on its
            // own line so the next append does not fuse with the fragment.
            needs_newline_repair = !text.is_empty() && !text.ends_with('\n');
            let mut seen = BTreeSet::new();
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                match serde_json::from_str::<AttemptRecord>(line) {
                    Ok(record) => {
                        let key = (
                            record.behavior_id.clone(),
                            record.target_key.clone(),
                            record.shot_index,
                        );
                        if seen.insert(key) {
                            records.push(record);
                        }
                    }
                    Err(_) => skipped_lines += 1,
                }
            }
        }
        let mut writer = OpenOptions::new().create(true).append(true).open(&path)?;
        if needs_newline_repair {
            writeln!(writer)?;
            writer.flush()?;
        }
        Ok(Self {
            path,
            writer: Mutex::new(writer),
            records: Mutex::new(records),
            skipped_lines,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Lines that failed to parse on load (usually a torn final line).
    pub fn skipped_lines(&self) -> usize {
        self.skipped_lines
    }

    pub fn append(&self, record: &AttemptRecord) -> std::io::Result<()> {
        let line = serde_json::to_string(record).expect("attempt records serialize");
        {
            let mut writer = self.writer.lock().expect("store writer lock");
            writeln!(writer, "{line}")?;
            writer.flush()?;
        }
        self.records
            .lock()
            .expect("store records lock")
            .push(record.clone());
        Ok(())
    }

    pub fn records(&self) -> Vec<AttemptRecord> {
        self.records.lock().expect("store records lock").clone()
    }

    pub fn len(&self) -> usize {
        self.records.lock().expect("store records lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Shot indexes already on disk for a (behavior, target) pair.
    pub fn recorded_shots(&self, behavior_id: &str, target_key: &str) -> BTreeSet<u32> {
        self.records
            .lock()
            .expect("store records lock")
            .iter()
            .filter(|r| r.behavior_id == behavior_id && r.target_key == target_key)
            .map(|r| r.shot_index)
            .collect()
    }

    pub fn has_jailbreak(&self, behavior_id: &str, target_key: &str) -> bool {
        self.records
            .lock()
            .expect("store records lock")
            .iter()
            .any(|r| {
                r.behavior_id == behavior_id
                    && r.target_key == target_key
                    && r.verdict.is_jailbroken()
            })
    }
}
