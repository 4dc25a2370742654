//! Storage-space fill and storage-bandwidth workers inside the quota
//! directory.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::thread::JoinHandle;

use tvstress_core::load::{chunk_sizes, WorkerRole, FILE_CHUNK, TRANSFER_CHUNK};

use super::counters::Counters;
use super::stop::StopSignal;

/// Bytes held by regular files under `dir`, recursively.
pub fn dir_bytes(dir: &Path) -> io::Result<u64> {
    let mut total = 0;
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let meta = entry.metadata()?;
        if meta.is_dir() {
            total += dir_bytes(&entry.path())?;
        } else if meta.is_file() {
            total += meta.len();
        }
    }
    Ok(total)
}

#[derive(Debug, thiserror::Error)]
pub enum SpaceError {
    #[error("quota directory unavailable: {0}")]
    QuotaDir(io::Error),
    #[error("disk full at {written} of {wanted} bytes: {source}")]
    DiskFull {
        written: u64,
        wanted: u64,
        source: io::Error,
    },
}

/// Dummy files that bring the quota directory up to a used-byte target.
#[derive(Debug)]
pub struct SpaceFill {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl SpaceFill {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        SpaceFill {
            dir: dir.into(),
            files: Vec::new(),
        }
    }

    /// Replaces any earlier fill so the directory holds `target_used`
    /// bytes, counting files that were already there.
    pub fn fill(&mut self, target_used: u64) -> Result<(), SpaceError> {
        self.clear();
        let used = dir_bytes(&self.dir).map_err(SpaceError::QuotaDir)?;
        let wanted = target_used.saturating_sub(used);
        let block = vec![0x5Au8; FILE_CHUNK as usize];
        let mut written = 0;
        for (i, size) in chunk_sizes(wanted, FILE_CHUNK).into_iter().enumerate() {
            let path = self.dir.join(format!("fill_{i}.dat"));
            self.files.push(path.clone());
            let r = File::create(&path).and_then(|mut f| f.write_all(&block[..size as usize]));
            if let Err(source) = r {
                return Err(SpaceError::DiskFull { written, wanted, source });
            }
            written += size;
        }
        Ok(())
    }

    pub fn clear(&mut self) {
        for f in self.files.drain(..) {
            let _ = fs::remove_file(f);
        }
    }

    pub fn file_count(&self) -> usize {
        self.files.len()
    }
}

impl Drop for SpaceFill {
    fn drop(&mut self) {
        self.clear();
    }
}

/// Alternating writer/reader workers over 1 MiB scratch files.
#[derive(Debug)]
pub struct StorageBwLoad {
    stop: Arc<StopSignal>,
    threads: Vec<JoinHandle<()>>,
    files: Vec<PathBuf>,
    roles: Vec<WorkerRole>,
}

impl StorageBwLoad {
    pub fn start(dir: &Path, workers: u32, counters: Arc<Counters>) -> io::Result<StorageBwLoad> {
        let stop = Arc::new(StopSignal::new());
        let mut load = StorageBwLoad {
            stop: stop.clone(),
            threads: Vec::new(),
            files: Vec::new(),
            roles: Vec::new(),
        };
        let chunk = vec![0x3Cu8; TRANSFER_CHUNK];
        for i in 0..workers {
            let path = dir.join(format!("bw_{i}.tmp"));
            let mut f = OpenOptions::new().create(true).truncate(true).read(true).write(true).open(&path)?;
            load.files.push(path);
            for _ in 0..(FILE_CHUNK as usize / TRANSFER_CHUNK) {
                f.write_all(&chunk)?;
            }
            let role = WorkerRole::for_index(i);
            load.roles.push(role);
            let stop = stop.clone();
            let counters = counters.clone();
            load.threads.push(
                std::thread::Builder::new()
                    .name(format!("storbw-{i}"))
                    .spawn(move || {
                        let _ = run(f, role, &stop, &counters);
                    })?,
            );
        }
        Ok(load)
    }

    pub fn roles(&self) -> &[WorkerRole] {
        &self.roles
    }

    pub fn workers(&self) -> usize {
        self.threads.len()
    }

    pub fn stop(mut self) {
        self.stop.raise();
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
        for f in self.files.drain(..) {
            let _ = fs::remove_file(f);
        }
    }
}

fn run(mut f: File, role: WorkerRole, stop: &StopSignal, counters: &Counters) -> io::Result<()> {
    let mut buf = vec![0xC3u8; TRANSFER_CHUNK];
    let per_pass = FILE_CHUNK as usize / TRANSFER_CHUNK;
    while !stop.is_raised() {
        f.seek(SeekFrom::Start(0))?;
        for _ in 0..per_pass {
            if stop.is_raised() {
                return Ok(());
            }
            match role {
                WorkerRole::Sender => {
                    f.write_all(&buf)?;
                    Counters::add(&counters.disk_write_bytes, buf.len() as u64);
                }
                WorkerRole::Receiver => {
                    f.read_exact(&mut buf)?;
                    Counters::add(&counters.disk_read_bytes, buf.len() as u64);
                }
            }
        }
        if role == WorkerRole::Sender {
            f.sync_data()?;
        }
    }
    Ok(())
}
