//! Directory-per-entity file store.
//!
//! ```text
//! <root>/tracks/<track_id>/audio.<ext>
//! <root>/tracks/<track_id>/bundle.json
//! <root>/tracks/<track_id>/track.json     written last; marks the track as present
//! <root>/sessions/<session_id>/session.json
//! ```
//!
//! Every file is written to a temporary name and renamed into place.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};
use trackmate_core::llm::ChatSession;
use trackmate_core::report::{AnalysisBundle, MusicReport};

/// How the stored report's depth was chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum RefinementInfo {
    /// The evaluator picked `depth` (or the fallback, when `defaulted`).
    Refined { depth: u8, defaulted: bool, interpretation: String },
    /// No backend configured.
    Skipped { depth: u8 },
    /// The backend failed; the deepest report was stored.
    Failed { depth: u8, error: String },
}

impl RefinementInfo {
    pub fn depth(&self) -> u8 {
        match self {
            Self::Refined { depth, .. } | Self::Skipped { depth } | Self::Failed { depth, .. } => *depth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub track_id: String,
    pub original_filename: String,
    /// Unix seconds.
    pub created_at: u64,
    pub report: MusicReport,
    pub refinement: RefinementInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub track_id: String,
    pub created_at: u64,
    pub updated_at: u64,
    pub session: ChatSession,
}

pub fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Hex SHA-256 of the uploaded bytes.
pub fn track_id_for(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn is_track_id(id: &str) -> bool {
    id.len() == 64 && id.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

/// Session ids are hyphenated lowercase UUIDs.
pub fn is_session_id(id: &str) -> bool {
    uuid::Uuid::try_parse(id).is_ok_and(|u| u.hyphenated().to_string() == id)
}

#[derive(Debug, Clone)]
pub struct FileStore {
    root: PathBuf,
}

impl FileStore {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(root.join("tracks"))?;
        fs::create_dir_all(root.join("sessions"))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn track_dir(&self, id: &str) -> PathBuf {
        debug_assert!(is_track_id(id));
        self.root.join("tracks").join(id)
    }

    fn session_path(&self, id: &str) -> PathBuf {
        debug_assert!(is_session_id(id));
        self.root.join("sessions").join(id).join("session.json")
    }

    pub fn track(&self, id: &str) -> io::Result<Option<TrackRecord>> {
        read_json(&self.track_dir(id).join("track.json"))
    }

    pub fn bundle(&self, id: &str) -> io::Result<Option<AnalysisBundle>> {
        read_json(&self.track_dir(id).join("bundle.json"))
    }

    /// Stores audio and bundle, then the record that makes the track visible.
    pub fn put_track(&self, record: &TrackRecord, audio: &[u8], ext: &str, bundle: &AnalysisBundle) -> io::Result<()> {
        let dir = self.track_dir(&record.track_id);
        fs::create_dir_all(&dir)?;
        write_atomic(&dir.join(format!("audio.{ext}")), audio)?;
        write_atomic(&dir.join("bundle.json"), &to_json(bundle)?)?;
        write_atomic(&dir.join("track.json"), &to_json(record)?)
    }

    pub fn session(&self, id: &str) -> io::Result<Option<SessionRecord>> {
        read_json(&self.session_path(id))
    }

    pub fn put_session(&self, record: &SessionRecord) -> io::Result<()> {
        let path = self.session_path(&record.session_id);
        fs::create_dir_all(path.parent().unwrap())?;
        write_atomic(&path, &to_json(record)?)
    }

    pub fn track_count(&self) -> io::Result<usize> {
        Ok(fs::read_dir(self.root.join("tracks"))?
            .filter_map(Result::ok)
            .filter(|e| e.path().join("track.json").is_file())
            .count())
    }
}

fn to_json<T: Serialize>(value: &T) -> io::Result<Vec<u8>> {
    serde_json::to_vec_pretty(value).map_err(io::Error::other)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> io::Result<Option<T>> {
    match fs::read(path) {
        Ok(bytes) => serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e),
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension(format!("tmp-{}", uuid::Uuid::new_v4().simple()));
    let mut f = fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_validated() {
        let id = track_id_for(b"abc");
        assert_eq!(id, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert!(is_track_id(&id));
        assert!(!is_track_id("../etc"));
        assert!(!is_track_id(&id.to_uppercase()));
        let s = uuid::Uuid::new_v4().to_string();
        assert!(is_session_id(&s));
        assert!(!is_session_id(&s.to_uppercase()));
        assert!(!is_session_id("../../x"));
    }

    #[test]
    fn missing_entities_read_as_none() {
        let dir = std::env::temp_dir().join(format!("tm-store-{}", uuid::Uuid::new_v4()));
        let store = FileStore::open(&dir).unwrap();
        assert!(store.track(&track_id_for(b"x")).unwrap().is_none());
        assert!(store.session(&uuid::Uuid::new_v4().to_string()).unwrap().is_none());
        assert_eq!(store.track_count().unwrap(), 0);
        fs::remove_dir_all(dir).ok();
    }
}
