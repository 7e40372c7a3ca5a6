use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Mutex};
use std::time::{Duration, Instant};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{ChatBackend, ChatMessage, ResponseError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchJob {
    pub id: String,
    pub messages: Vec<ChatMessage>,
}

#[derive(Debug, Clone)]
pub struct BatchLimits {
    pub max_in_flight: usize,
    /// Extra attempts after the first failure.
    pub retries: u32,
    /// Delay before retry `n` is `backoff * 2^(n-1)`.
    pub backoff: Duration,
    /// Minimum spacing between request starts, across all workers.
    pub min_interval: Option<Duration>,
}

impl Default for BatchLimits {
    fn default() -> Self {
        Self {
            max_in_flight: 4,
            retries: 2,
            backoff: Duration::from_millis(500),
            min_interval: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JobResult<T> {
    Success(T),
    Failure(String),
}

impl<T> JobResult<T> {
    pub fn ok(&self) -> Option<&T> {
        match self {
            JobResult::Success(v) => Some(v),
            JobResult::Failure(_) => None,
        }
    }
}

/// One line of the checkpoint file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub entry_id: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub attempts: u32,
}

#[derive(Debug)]
pub struct BatchReport<T> {
    /// One result per job, in job order.
    pub results: Vec<(String, JobResult<T>)>,
    /// Requests actually sent in this run, retries included.
    pub requests_sent: usize,
    /// Jobs answered from the checkpoint.
    pub resumed: usize,
}

impl<T> BatchReport<T> {
    pub fn failures(&self) -> impl Iterator<Item = (&str, &str)> {
        self.results.iter().filter_map(|(id, r)| match r {
            JobResult::Failure(e) => Some((id.as_str(), e.as_str())),
            JobResult::Success(_) => None,
        })
    }

    /// `{"entry_id": .., "error": ..}` per failed job.
    pub fn failure_log_jsonl(&self) -> String {
        self.failures()
            .map(|(id, e)| serde_json::json!({ "entry_id": id, "error": e }).to_string() + "\n")
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("max_in_flight must be at least 1")]
    NoWorkers,
    #[error("duplicate job id {0}")]
    DuplicateJob(String),
    #[error("checkpoint {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("checkpoint {path} line {line}: {reason}")]
    Checkpoint { path: PathBuf, line: usize, reason: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> BatchError + '_ {
    move |source| BatchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads checkpoint records. A final line without a newline is a torn write;
/// it is dropped and the file truncated to the last complete record.
fn load_checkpoint(path: &Path) -> Result<HashMap<String, CheckpointRecord>, BatchError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(HashMap::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    if complete.len() != text.len() {
        log::warn!("{}: dropping torn final record", path.display());
        fs::write(path, complete).map_err(io_err(path))?;
    }
    let mut records = HashMap::new();
    for (i, line) in complete.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: CheckpointRecord = serde_json::from_str(line).map_err(|e| BatchError::Checkpoint {
            path: path.to_path_buf(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        records.insert(rec.entry_id.clone(), rec);
    }
    Ok(records)
}

fn from_record<T: DeserializeOwned>(rec: &CheckpointRecord) -> JobResult<T> {
    if rec.status == "success" {
        if let Some(v) = rec.result.clone() {
            if let Ok(t) = serde_json::from_value(v) {
                return JobResult::Success(t);
            }
        }
        return JobResult::Failure("checkpointed result does not decode".into());
    }
    JobResult::Failure(rec.error.clone().unwrap_or_default())
}

struct Pacer {
    interval: Option<Duration>,
    next: Mutex<Option<Instant>>,
}

impl Pacer {
    fn wait(&self) {
        let Some(interval) = self.interval else { return };
        let slot = {
            let mut next = self.next.lock().expect("pacer lock");
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + interval);
            slot
        };
        let now = Instant::now();
        if slot > now {
            std::thread::sleep(slot - now);
        }
    }
}

/// Sends every job not already in the checkpoint, at most
/// `limits.max_in_flight` at a time. New checkpoint records are appended in job
/// order, so the file is identical whatever the completion order.
pub fn run_batch<T, F>(
    jobs: &[BatchJob],
    backend: &dyn ChatBackend,
    parse: F,
    limits: &BatchLimits,
    checkpoint: Option<&Path>,
) -> Result<BatchReport<T>, BatchError>
where
    T: Serialize + DeserializeOwned + Send,
    F: Fn(&BatchJob, &str) -> Result<T, ResponseError> + Sync,
{
    if limits.max_in_flight == 0 {
        return Err(BatchError::NoWorkers);
    }
    let mut seen = HashSet::new();
    for job in jobs {
        if !seen.insert(job.id.as_str()) {
            return Err(BatchError::DuplicateJob(job.id.clone()));
        }
    }

    let done = match checkpoint {
        Some(p) => load_checkpoint(p)?,
        None => HashMap::new(),
    };
    let mut slots: Vec<Option<JobResult<T>>> = jobs
        .iter()
        .map(|j| done.get(&j.id).map(from_record))
        .collect();
    let resumed = slots.iter().filter(|s| s.is_some()).count();
    let todo: Vec<usize> = (0..jobs.len()).filter(|&i| slots[i].is_none()).collect();

    let mut sink = match checkpoint {
        Some(p) => Some(
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .map_err(io_err(p))?,
        ),
        None => None,
    };

    let next = AtomicUsize::new(0);
    let sent = AtomicUsize::new(0);
    let pacer = Pacer {
        interval: limits.min_interval,
        next: Mutex::new(None),
    };
    let workers = limits.max_in_flight.min(todo.len());
    let (tx, rx) = mpsc::channel::<(usize, JobResult<T>, u32)>();

    let mut write_error = None;
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, sent, pacer, todo, parse) = (&next, &sent, &pacer, &todo, &parse);
            scope.spawn(move || loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(&idx) = todo.get(k) else { break };
                let (result, attempts) = attempt(&jobs[idx], backend, parse, limits, pacer, sent);
                if tx.send((k, result, attempts)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut pending: BTreeMap<usize, (JobResult<T>, u32)> = BTreeMap::new();
        let mut flushed = 0;
        for (k, result, attempts) in rx {
            pending.insert(k, (result, attempts));
            while let Some((result, attempts)) = pending.remove(&flushed) {
                let idx = todo[flushed];
                if let (Some(file), None) = (sink.as_mut(), write_error.as_ref()) {
                    if let Err(e) = append_record(file, &jobs[idx].id, &result, attempts) {
                        write_error = Some(e);
                    }
                }
                slots[idx] = Some(result);
                flushed += 1;
            }
        }
    });
    if let (Some(e), Some(p)) = (write_error, checkpoint) {
        return Err(io_err(p)(e));
    }

    let results = jobs
        .iter()
        .zip(slots)
        .map(|(j, s)| (j.id.clone(), s.expect("every job resolved")))
        .collect();
    Ok(BatchReport {
        results,
        requests_sent: sent.into_inner(),
        resumed,
    })
}

fn attempt<T, F>(
    job: &BatchJob,
    backend: &dyn ChatBackend,
    parse: &F,
    limits: &BatchLimits,
    pacer: &Pacer,
    sent: &AtomicUsize,
) -> (JobResult<T>, u32)
where
    F: Fn(&BatchJob, &str) -> Result<T, ResponseError>,
{
    let mut last = String::new();
    for n in 0..=limits.retries {
        if n > 0 {
            let delay = limits.backoff.saturating_mul(1 << (n - 1).min(16));
            if !delay.is_zero() {
                std::thread::sleep(delay);
            }
        }
        pacer.wait();
        sent.fetch_add(1, Ordering::SeqCst);
        match backend.send(&job.messages) {
            Ok(text) => match parse(job, &text) {
                Ok(v) => return (JobResult::Success(v), n + 1),
                Err(e) => last = e.to_string(),
            },
            Err(e) => last = e.to_string(),
        }
        log::debug!("job {} attempt {} failed: {last}", job.id, n + 1);
    }
    (JobResult::Failure(last), limits.retries + 1)
}

fn append_record<T: Serialize>(file: &mut File, id: &str, result: &JobResult<T>, attempts: u32) -> io::Result<()> {
    let rec = match result {
        JobResult::Success(v) => CheckpointRecord {
            entry_id: id.to_string(),
            status: "success".into(),
            result: Some(serde_json::to_value(v).map_err(io::Error::other)?),
            error: None,
            attempts,
        },
        JobResult::Failure(e) => CheckpointRecord {
            entry_id: id.to_string(),
            status: "failure".into(),
            result: None,
            error: Some(e.clone()),
            attempts,
        },
    };
    let mut line = serde_json::to_string(&rec).map_err(io::Error::other)?;
    line.push('\n');
    file.write_all(line.as_bytes())?;
    file.flush()
}
