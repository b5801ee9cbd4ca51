//! Single-file result store (SQLite) plus a content-addressed object
//! directory beside it.
//!
//! For a store at `scan.db` the objects live in `scan.db.objects/<sha256>`
//! and the lock file is `scan.db.lock`.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, MutexGuard};

use chrono::{DateTime, Utc};
use rusqlite::{params, Connection, OptionalExtension};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::harvest::{DownloadRecord, DownloadStatus, SearchHit};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("database: {0}")]
    Db(#[from] rusqlite::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("store {0} is locked by another process")]
    Locked(PathBuf),
    #[error("object {0} is missing or corrupt")]
    BadObject(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

const SCHEMA: &str = r#"
CREATE TABLE IF NOT EXISTS hits (
    id           INTEGER PRIMARY KEY,
    query        TEXT NOT NULL,
    engine       TEXT NOT NULL,
    page         INTEGER NOT NULL,
    rank         INTEGER NOT NULL,
    url          TEXT NOT NULL,
    retrieved_at TEXT NOT NULL,
    is_repeat    INTEGER NOT NULL,
    UNIQUE (query, engine, page, rank, url)
);
CREATE TABLE IF NOT EXISTS query_errors (
    id      INTEGER PRIMARY KEY,
    query   TEXT NOT NULL,
    engine  TEXT NOT NULL,
    page    INTEGER NOT NULL,
    message TEXT NOT NULL,
    at      TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS objects (
    sha256     TEXT PRIMARY KEY,
    size_bytes INTEGER NOT NULL,
    first_seen TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS downloads (
    id            INTEGER PRIMARY KEY,
    hit_id        INTEGER NOT NULL UNIQUE REFERENCES hits(id),
    status        TEXT NOT NULL,
    reason        TEXT,
    sha256        TEXT REFERENCES objects(sha256),
    declared_type TEXT,
    size_bytes    INTEGER NOT NULL,
    attempts      INTEGER NOT NULL,
    completed_at  TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS extractions (
    sha256       TEXT PRIMARY KEY REFERENCES objects(sha256),
    status       TEXT NOT NULL,
    segments     INTEGER NOT NULL,
    failures     TEXT NOT NULL,
    extracted_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS findings (
    nid        TEXT NOT NULL,
    sha256     TEXT NOT NULL REFERENCES objects(sha256),
    first_seen TEXT NOT NULL,
    PRIMARY KEY (nid, sha256)
);
"#;

/// Hex SHA-256 of `bytes`, the name objects are stored under.
pub fn digest_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Exclusive ownership of a store path, held until dropped.
#[derive(Debug)]
pub struct StoreLock {
    _file: File,
    path: PathBuf,
}

impl StoreLock {
    pub fn acquire(store_path: &Path) -> Result<Self, StoreError> {
        let path = sibling(store_path, "lock");
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(io_err(&path))?;
        match file.try_lock() {
            Ok(()) => Ok(StoreLock { _file: file, path }),
            Err(fs::TryLockError::WouldBlock) => Err(StoreError::Locked(store_path.to_path_buf())),
            Err(fs::TryLockError::Error(e)) => Err(io_err(&path)(e)),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

/// Totals over the whole store.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct StoreStats {
    pub queries: u64,
    pub query_errors: u64,
    pub hits: u64,
    pub unique_urls: u64,
    pub downloads_ok: u64,
    pub downloads_failed: u64,
    pub type_mismatch: u64,
    pub objects: u64,
    pub extraction_failures: u64,
    pub unique_ids: u64,
    pub findings: u64,
}

/// One (ID, object, hit) join row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExposureRow {
    pub nid: String,
    pub sha256: String,
    pub url: String,
    pub engine: String,
    pub query: String,
    pub page: u32,
    pub rank: u32,
    pub declared_type: String,
    pub first_seen: String,
}

#[derive(Debug)]
pub struct Store {
    conn: Mutex<Connection>,
    objects_dir: PathBuf,
}

fn ts(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn parse_ts(s: &str) -> DateTime<Utc> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .unwrap_or_default()
}

impl Store {
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        let objects_dir = sibling(path, "objects");
        fs::create_dir_all(&objects_dir).map_err(io_err(&objects_dir))?;
        let conn = Connection::open(path)?;
        conn.execute_batch("PRAGMA foreign_keys = ON; PRAGMA journal_mode = WAL;")?;
        conn.execute_batch(SCHEMA)?;
        Ok(Store {
            conn: Mutex::new(conn),
            objects_dir,
        })
    }

    fn conn(&self) -> MutexGuard<'_, Connection> {
        self.conn.lock().expect("store mutex poisoned")
    }

    pub fn objects_dir(&self) -> &Path {
        &self.objects_dir
    }

    pub fn object_path(&self, sha256: &str) -> PathBuf {
        self.objects_dir.join(sha256)
    }

    /// Inserts a hit unless the same (query, engine, page, rank, url) row
    /// exists. Returns the row id and whether the URL had already been
    /// seen under a different key.
    pub fn insert_hit(&self, hit: &SearchHit) -> Result<(i64, bool), StoreError> {
        let conn = self.conn();
        let existing: Option<(i64, bool)> = conn
            .query_row(
                "SELECT id, is_repeat FROM hits WHERE query=?1 AND engine=?2 AND page=?3 AND rank=?4 AND url=?5",
                params![
                    hit.query,
                    hit.engine.as_str(),
                    hit.page_number,
                    hit.rank_on_page,
                    hit.url
                ],
                |r| Ok((r.get(0)?, r.get(1)?)),
            )
            .optional()?;
        if let Some(found) = existing {
            return Ok(found);
        }
        let seen: bool = conn.query_row(
            "SELECT EXISTS(SELECT 1 FROM hits WHERE url=?1)",
            params![hit.url],
            |r| r.get(0),
        )?;
        conn.execute(
            "INSERT INTO hits (query, engine, page, rank, url, retrieved_at, is_repeat) VALUES (?1,?2,?3,?4,?5,?6,?7)",
            params![
                hit.query,
                hit.engine.as_str(),
                hit.page_number,
                hit.rank_on_page,
                hit.url,
                ts(hit.retrieved_at),
                seen
            ],
        )?;
        Ok((conn.last_insert_rowid(), seen))
    }

    pub fn record_query_error(
        &self,
        query: &str,
        engine: &str,
        page: u32,
        message: &str,
        at: DateTime<Utc>,
    ) -> Result<(), StoreError> {
        self.conn().execute(
            "INSERT INTO query_errors (query, engine, page, message, at) VALUES (?1,?2,?3,?4,?5)",
            params![query, engine, page, message, ts(at)],
        )?;
        Ok(())
    }

    pub fn hit(&self, hit_id: i64) -> Result<Option<SearchHit>, StoreError> {
        Ok(self
            .conn()
            .query_row(
                "SELECT query, engine, page, rank, url, retrieved_at FROM hits WHERE id=?1",
                params![hit_id],
                |r| {
                    Ok(SearchHit {
                        query: r.get(0)?,
                        engine: r.get::<_, String>(1)?.parse().unwrap_or(nidscan_core::Engine::Google),
                        page_number: r.get(2)?,
                        rank_on_page: r.get(3)?,
                        url: r.get(4)?,
                        retrieved_at: parse_ts(&r.get::<_, String>(5)?),
                    })
                },
            )
            .optional()?)
    }

    /// Writes `bytes` under their digest unless already present. Returns
    /// the digest and whether a new object was created.
    pub fn put_object(&self, bytes: &[u8], at: DateTime<Utc>) -> Result<(String, bool), StoreError> {
        let sha = digest_hex(bytes);
        let path = self.object_path(&sha);
        let conn = self.conn();
        let known: bool = conn.query_row(
            "SELECT EXISTS(SELECT 1 FROM objects WHERE sha256=?1)",
            params![sha],
            |r| r.get(0),
        )?;
        if !path.exists() {
            let mut tmp = tempfile::NamedTempFile::new_in(&self.objects_dir).map_err(io_err(&self.objects_dir))?;
            tmp.write_all(bytes).map_err(io_err(&path))?;
            tmp.persist(&path).map_err(|e| io_err(&path)(e.error))?;
        }
        if !known {
            conn.execute(
                "INSERT INTO objects (sha256, size_bytes, first_seen) VALUES (?1,?2,?3)",
                params![sha, bytes.len() as i64, ts(at)],
            )?;
        }
        Ok((sha, !known))
    }

    /// Reads an object back and checks its digest.
    pub fn object_bytes(&self, sha256: &str) -> Result<Vec<u8>, StoreError> {
        let path = self.object_path(sha256);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        if digest_hex(&bytes) != sha256 {
            return Err(StoreError::BadObject(sha256.to_string()));
        }
        Ok(bytes)
    }

    pub fn download_for_hit(&self, hit_id: i64) -> Result<Option<DownloadRecord>, StoreError> {
        let row = self
            .conn()
            .query_row(
                "SELECT status, reason, sha256, declared_type, size_bytes, attempts, completed_at
                 FROM downloads WHERE hit_id=?1",
                params![hit_id],
                |r| {
                    Ok((
                        r.get::<_, String>(0)?,
                        r.get::<_, Option<String>>(1)?,
                        r.get::<_, Option<String>>(2)?,
                        r.get::<_, Option<String>>(3)?,
                        r.get::<_, i64>(4)?,
                        r.get::<_, u32>(5)?,
                        r.get::<_, String>(6)?,
                    ))
                },
            )
            .optional()?;
        let Some((status, reason, sha256, declared_type, size, attempts, completed)) = row else {
            return Ok(None);
        };
        let Some(hit) = self.hit(hit_id)? else {
            return Ok(None);
        };
        let status = match status.as_str() {
            "success" => DownloadStatus::Success,
            "type_mismatch" => DownloadStatus::TypeMismatch,
            _ => DownloadStatus::Failed(reason.unwrap_or_default()),
        };
        Ok(Some(DownloadRecord {
            hit_id,
            hit,
            stored_path: sha256.as_deref().map(|s| self.object_path(s)),
            status,
            sha256,
            declared_type,
            size_bytes: size as u64,
            attempts,
            completed_at: parse_ts(&completed),
        }))
    }

    /// Inserts or replaces the download outcome for a hit.
    pub fn put_download(&self, rec: &DownloadRecord) -> Result<(), StoreError> {
        let (status, reason) = match &rec.status {
            DownloadStatus::Success => ("success", None),
            DownloadStatus::TypeMismatch => ("type_mismatch", None),
            DownloadStatus::Failed(r) => ("failed", Some(r.as_str())),
        };
        self.conn().execute(
            "INSERT INTO downloads (hit_id, status, reason, sha256, declared_type, size_bytes, attempts, completed_at)
             VALUES (?1,?2,?3,?4,?5,?6,?7,?8)
             ON CONFLICT(hit_id) DO UPDATE SET status=excluded.status, reason=excluded.reason,
                sha256=excluded.sha256, declared_type=excluded.declared_type,
                size_bytes=excluded.size_bytes, attempts=excluded.attempts,
                completed_at=excluded.completed_at",
            params![
                rec.hit_id,
                status,
                reason,
                rec.sha256,
                rec.declared_type,
                rec.size_bytes as i64,
                rec.attempts,
                ts(rec.completed_at)
            ],
        )?;
        Ok(())
    }

    /// Successfully downloaded objects with no extraction yet, with the
    /// declared type to extract them as (the smallest, when hits disagree).
    pub fn pending_extractions(&self) -> Result<Vec<(String, String)>, StoreError> {
        let conn = self.conn();
        let mut stmt = conn.prepare(
            "SELECT d.sha256, MIN(d.declared_type) FROM downloads d
             WHERE d.status='success' AND d.sha256 NOT IN (SELECT sha256 FROM extractions)
             GROUP BY d.sha256 ORDER BY d.sha256",
        )?;
        let rows = stmt
            .query_map([], |r| Ok((r.get(0)?, r.get(1)?)))?
            .collect::<Result<Vec<_>, _>>()?;
        Ok(rows)
    }

    pub fn record_extraction(
        &self,
        sha256: &str,
        ok: bool,
        segments: usize,
        failures: &str,
        at: DateTime<Utc>,
    ) -> Result<(), StoreError> {
        self.conn().execute(
            "INSERT OR REPLACE INTO extractions (sha256, status, segments, failures, extracted_at)
             VALUES (?1,?2,?3,?4,?5)",
            params![
                sha256,
                if ok { "ok" } else { "failed" },
                segments as i64,
                failures,
                ts(at)
            ],
        )?;
        Ok(())
    }

    /// Records that `nid` occurs in object `sha256`; false if already known.
    pub fn insert_finding(&self, nid: &str, sha256: &str, at: DateTime<Utc>) -> Result<bool, StoreError> {
        let n = self.conn().execute(
            "INSERT OR IGNORE INTO findings (nid, sha256, first_seen) VALUES (?1,?2,?3)",
            params![nid, sha256, ts(at)],
        )?;
        Ok(n == 1)
    }

    pub fn stats(&self) -> Result<StoreStats, StoreError> {
        let conn = self.conn();
        let count =
            |sql: &str| -> Result<u64, StoreError> { Ok(conn.query_row(sql, [], |r| r.get::<_, i64>(0))? as u64) };
        Ok(StoreStats {
            queries: count("SELECT COUNT(*) FROM (SELECT query FROM hits UNION SELECT query FROM query_errors)")?,
            query_errors: count(
                "SELECT COUNT(*) FROM (SELECT DISTINCT query, engine, page, message FROM query_errors)",
            )?,
            hits: count("SELECT COUNT(*) FROM hits")?,
            unique_urls: count("SELECT COUNT(DISTINCT url) FROM hits")?,
            downloads_ok: count("SELECT COUNT(*) FROM downloads WHERE status='success'")?,
            downloads_failed: count("SELECT COUNT(*) FROM downloads WHERE status='failed'")?,
            type_mismatch: count("SELECT COUNT(*) FROM downloads WHERE status='type_mismatch'")?,
            objects: count("SELECT COUNT(*) FROM objects")?,
            extraction_failures: count("SELECT COUNT(*) FROM extractions WHERE status='failed'")?,
            unique_ids: count("SELECT COUNT(DISTINCT nid) FROM findings")?,
            findings: count("SELECT COUNT(*) FROM findings")?,
        })
    }

    /// Every (ID, object, hit) combination, ordered for determinism.
    pub fn exposure_rows(&self) -> Result<Vec<ExposureRow>, StoreError> {
        let conn = self.conn();
        let mut stmt = conn.prepare(
            "SELECT f.nid, f.sha256, h.url, h.engine, h.query, h.page, h.rank, d.declared_type, f.first_seen
             FROM findings f
             JOIN downloads d ON d.sha256 = f.sha256 AND d.status = 'success'
             JOIN hits h ON h.id = d.hit_id
             ORDER BY f.nid, f.sha256, h.id",
        )?;
        let rows = stmt
            .query_map([], |r| {
                Ok(ExposureRow {
                    nid: r.get(0)?,
                    sha256: r.get(1)?,
                    url: r.get(2)?,
                    engine: r.get(3)?,
                    query: r.get(4)?,
                    page: r.get(5)?,
                    rank: r.get(6)?,
                    declared_type: r.get::<_, Option<String>>(7)?.unwrap_or_default(),
                    first_seen: r.get(8)?,
                })
            })?
            .collect::<Result<Vec<_>, _>>()?;
        Ok(rows)
    }

    /// Page number of every stored hit, for the rank histogram.
    pub fn hit_pages(&self) -> Result<Vec<u32>, StoreError> {
        let conn = self.conn();
        let mut stmt = conn.prepare("SELECT page FROM hits ORDER BY id")?;
        let rows = stmt.query_map([], |r| r.get(0))?.collect::<Result<Vec<_>, _>>()?;
        Ok(rows)
    }
}
