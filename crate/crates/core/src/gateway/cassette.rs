use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ChatRequest, GatewayError, Message};
use crate::util::append_jsonl;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Entry {
    key: String,
    tag: String,
    messages: Vec<Message>,
    reply: String,
}

/// Append-only JSONL map from request key to reply. The first entry for a
/// key wins on load.
#[derive(Debug)]
pub struct Cassette {
    path: PathBuf,
    entries: Mutex<HashMap<String, String>>,
}

impl Cassette {
    /// Opens (or starts) a cassette file.
    pub fn open(path: &Path) -> Result<Self, GatewayError> {
        let mut entries = HashMap::new();
        if path.exists() {
            let text = fs::read_to_string(path).map_err(|e| GatewayError::Io(e.to_string()))?;
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let e: Entry = serde_json::from_str(line)
                    .map_err(|err| GatewayError::Io(format!("{}:{}: {err}", path.display(), i + 1)))?;
                entries.entry(e.key).or_insert(e.reply);
            }
        }
        Ok(Cassette {
            path: path.to_path_buf(),
            entries: Mutex::new(entries),
        })
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.entries.lock().unwrap().get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn record(&self, key: &str, req: &ChatRequest, reply: &str) -> Result<(), GatewayError> {
        let mut map = self.entries.lock().unwrap();
        if map.contains_key(key) {
            return Ok(());
        }
        let entry = Entry {
            key: key.to_string(),
            tag: req.tag.clone(),
            messages: req.messages.clone(),
            reply: reply.to_string(),
        };
        append_jsonl(&self.path, &entry).map_err(|e| GatewayError::Io(e.to_string()))?;
        map.insert(key.to_string(), reply.to_string());
        Ok(())
    }
}
