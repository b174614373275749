use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use log::warn;
use serde::{Deserialize, Serialize};

pub const CACHE_FILE: &str = "ccr_cache.jsonl";

#[derive(Serialize, Deserialize)]
struct Entry {
    smc_id: String,
    fingerprint: String,
    text: String,
}

/// Append-only store of generated queries keyed by `(smc_id, fingerprint)`.
///
/// Reads go through an in-memory map; writes append one JSON line under a
/// lock. The first entry for a key wins.
pub struct CcrCache {
    path: PathBuf,
    entries: RwLock<HashMap<(String, String), String>>,
    writer: Mutex<File>,
}

impl CcrCache {
    pub fn open(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(CACHE_FILE);
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (idx, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<Entry>(&line) {
                    Ok(e) => {
                        entries.entry((e.smc_id, e.fingerprint)).or_insert(e.text);
                    }
                    Err(err) => warn!("{}:{}: skipping bad cache line: {err}", path.display(), idx + 1),
                }
            }
        }
        let writer = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self {
            path,
            entries: RwLock::new(entries),
            writer: Mutex::new(writer),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, smc_id: &str, fingerprint: &str) -> Option<String> {
        self.entries
            .read()
            .expect("cache lock")
            .get(&(smc_id.to_owned(), fingerprint.to_owned()))
            .cloned()
    }

    pub fn put(&self, smc_id: &str, fingerprint: &str, text: &str) -> std::io::Result<()> {
        let key = (smc_id.to_owned(), fingerprint.to_owned());
        let mut writer = self.writer.lock().expect("cache writer lock");
        {
            let mut entries = self.entries.write().expect("cache lock");
            if entries.contains_key(&key) {
                return Ok(());
            }
            entries.insert(key, text.to_owned());
        }
        let line = serde_json::to_string(&Entry {
            smc_id: smc_id.to_owned(),
            fingerprint: fingerprint.to_owned(),
            text: text.to_owned(),
        })?;
        writeln!(writer, "{line}")?;
        writer.flush()
    }
}
