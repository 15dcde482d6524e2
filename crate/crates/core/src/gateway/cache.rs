use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: String,
    response_text: String,
}

/// Append-only `key -> response_text` store, one JSON object per line.
/// Later lines win when a key repeats.
pub struct ResponseCache {
    path: PathBuf,
    entries: RwLock<HashMap<String, String>>,
    file: Mutex<File>,
}

impl ResponseCache {
    pub fn open(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for line in reader.lines() {
                let line = line?;
                match serde_json::from_str::<CacheLine>(&line) {
                    Ok(rec) => {
                        entries.insert(rec.key, rec.response_text);
                    }
                    // a torn final line from an interrupted run
                    Err(_) if !line.trim().is_empty() => {
                        tracing::warn!(path = %path.display(), "ignoring malformed cache line")
                    }
                    Err(_) => {}
                }
            }
        }
        let mut file = OpenOptions::new().create(true).append(true).open(&path)?;
        let tail_torn = last_byte(&path)?.is_some_and(|b| b != b'\n');
        if tail_torn {
            writeln!(file)?;
        }
        Ok(Self {
            path,
            entries: RwLock::new(entries),
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.entries.read().unwrap().get(key).cloned()
    }

    pub fn put(&self, key: &str, response_text: &str) -> std::io::Result<()> {
        let line = serde_json::to_string(&CacheLine {
            key: key.to_string(),
            response_text: response_text.to_string(),
        })?;
        {
            let mut file = self.file.lock().unwrap();
            writeln!(file, "{line}")?;
            file.flush()?;
        }
        self.entries
            .write()
            .unwrap()
            .insert(key.to_string(), response_text.to_string());
        Ok(())
    }
}

fn last_byte(path: &Path) -> std::io::Result<Option<u8>> {
    use std::io::{Read, Seek, SeekFrom};
    let mut f = File::open(path)?;
    if f.metadata()?.len() == 0 {
        return Ok(None);
    }
    f.seek(SeekFrom::End(-1))?;
    let mut b = [0u8; 1];
    f.read_exact(&mut b)?;
    Ok(Some(b[0]))
}
