//! Landmark database persistence: line-delimited records with a version
//! header, sorted by IP, byte-reproducible.

use std::collections::BTreeMap;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geo::GeoCoordinate;
use crate::geolocate::{Landmark, LandmarkSource};

pub const LANDMARK_DB_HEADER: &str = "#geomark landmark-db v1";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("cannot access landmark db {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("file does not look like a landmark db (missing `{LANDMARK_DB_HEADER}` header)")]
    BadHeader,
    #[error("landmark db line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("duplicate landmark ip {0}")]
    DuplicateIp(Ipv4Addr),
}

/// Serialize a landmark set: header line, then one record per landmark,
/// sorted by IP. Duplicate IPs are rejected.
pub fn landmarks_to_text(landmarks: &[Landmark]) -> Result<String, StoreError> {
    let mut by_ip: BTreeMap<Ipv4Addr, &Landmark> = BTreeMap::new();
    for lm in landmarks {
        if by_ip.insert(lm.ip, lm).is_some() {
            return Err(StoreError::DuplicateIp(lm.ip));
        }
    }
    let mut out = String::from(LANDMARK_DB_HEADER);
    out.push('\n');
    for lm in by_ip.values() {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            lm.ip,
            lm.position.lat(),
            lm.position.lon(),
            lm.source.code(),
            lm.confidence
        ));
    }
    Ok(out)
}

pub fn write_landmarks(landmarks: &[Landmark], path: &Path) -> Result<(), StoreError> {
    let text = landmarks_to_text(landmarks)?;
    std::fs::write(path, text).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn landmarks_from_text(text: &str) -> Result<Vec<Landmark>, StoreError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == LANDMARK_DB_HEADER => {}
        _ => return Err(StoreError::BadHeader),
    }
    let mut seen = BTreeMap::new();
    let mut out = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        let bad = |reason: String| StoreError::Parse { line, reason };
        if fields.len() != 5 {
            return Err(bad(format!("expected 5 fields, got {}", fields.len())));
        }
        let ip: Ipv4Addr = fields[0]
            .parse()
            .map_err(|_| bad(format!("bad ip {:?}", fields[0])))?;
        let lat: f64 = fields[1]
            .parse()
            .map_err(|_| bad(format!("bad latitude {:?}", fields[1])))?;
        let lon: f64 = fields[2]
            .parse()
            .map_err(|_| bad(format!("bad longitude {:?}", fields[2])))?;
        let source = LandmarkSource::from_code(fields[3])
            .ok_or_else(|| bad(format!("bad source {:?}", fields[3])))?;
        let confidence: u8 = fields[4]
            .parse()
            .map_err(|_| bad(format!("bad confidence {:?}", fields[4])))?;
        let position = GeoCoordinate::new(lat, lon).map_err(|e| bad(e.to_string()))?;
        if seen.insert(ip, ()).is_some() {
            return Err(StoreError::DuplicateIp(ip));
        }
        out.push(Landmark {
            ip,
            position,
            source,
            confidence,
        });
    }
    Ok(out)
}

pub fn read_landmarks(path: &Path) -> Result<Vec<Landmark>, StoreError> {
    let text = std::fs::read_to_string(path).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    landmarks_from_text(&text)
}
