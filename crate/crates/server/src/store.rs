//! On-disk persistence: datasets addressed by the SHA-256 of their bytes, and
//! one JSON file per job.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use causalis::data::read_csv;
use causalis::{Result, TabularDataset};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobKind {
    Discover,
    Rca,
    Benchmark,
    Infer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    pub kind: JobKind,
    pub status: JobStatus,
    /// The request that created the job.
    pub params: Value,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<Value>,
    /// Unix seconds.
    pub created: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub started: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub finished: Option<f64>,
    /// Algorithm time, kept out of `result` so equal requests give equal results.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time: Option<f64>,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    cache: Mutex<HashMap<String, Arc<TabularDataset>>>,
}

impl Store {
    pub fn open(root: impl AsRef<Path>) -> io::Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(root.join("datasets"))?;
        fs::create_dir_all(root.join("jobs"))?;
        Ok(Self {
            root,
            cache: Mutex::new(HashMap::new()),
        })
    }

    fn dataset_path(&self, id: &str) -> Option<PathBuf> {
        // ids are hex digests; anything else cannot name a file here
        (!id.is_empty() && id.bytes().all(|b| b.is_ascii_hexdigit())).then(|| self.root.join("datasets").join(format!("{id}.csv")))
    }

    fn job_path(&self, id: &str) -> Option<PathBuf> {
        (!id.is_empty() && id.bytes().all(|b| b.is_ascii_hexdigit())).then(|| self.root.join("jobs").join(format!("{id}.json")))
    }

    /// Parses and stores CSV bytes; returns the content id.
    pub fn put_dataset(&self, bytes: &[u8]) -> Result<(String, Arc<TabularDataset>)> {
        let data = Arc::new(read_csv(bytes, true, None)?);
        let id = digest(bytes);
        let path = self.dataset_path(&id).expect("hex id");
        if !path.exists() {
            let tmp = path.with_extension("tmp");
            fs::write(&tmp, bytes)?;
            fs::rename(&tmp, &path)?;
        }
        self.cache.lock().expect("cache lock").insert(id.clone(), data.clone());
        Ok((id, data))
    }

    pub fn dataset(&self, id: &str) -> Option<Arc<TabularDataset>> {
        if let Some(d) = self.cache.lock().expect("cache lock").get(id) {
            return Some(d.clone());
        }
        let bytes = fs::read(self.dataset_path(id)?).ok()?;
        let data = Arc::new(read_csv(&bytes[..], true, None).ok()?);
        self.cache.lock().expect("cache lock").insert(id.to_owned(), data.clone());
        Some(data)
    }

    pub fn save_job(&self, job: &Job) -> io::Result<()> {
        let path = self.job_path(&job.id).ok_or_else(|| io::Error::other("invalid job id"))?;
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(job)?)?;
        fs::rename(tmp, path)
    }

    pub fn delete_job(&self, id: &str) -> io::Result<()> {
        match self.job_path(id) {
            Some(p) if p.exists() => fs::remove_file(p),
            _ => Ok(()),
        }
    }

    pub fn load_jobs(&self) -> io::Result<Vec<Job>> {
        let mut jobs = Vec::new();
        for entry in fs::read_dir(self.root.join("jobs"))? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                if let Ok(job) = serde_json::from_slice::<Job>(&fs::read(&path)?) {
                    jobs.push(job);
                }
            }
        }
        jobs.sort_by(|a, b| a.created.total_cmp(&b.created).then_with(|| a.id.cmp(&b.id)));
        Ok(jobs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn content_addressed_datasets() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let (a, data) = store.put_dataset(b"x,y\n1,2\n3,4\n5,6\n").unwrap();
        let (b, _) = store.put_dataset(b"x,y\n1,2\n3,4\n5,6\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(data.n_samples(), 3);
        let reopened = Store::open(dir.path()).unwrap();
        assert_eq!(reopened.dataset(&a).unwrap().n_samples(), 3);
        assert!(reopened.dataset("../etc").is_none());
        assert!(store.put_dataset(b"x,y\n1,oops\n").is_err());
    }
}
