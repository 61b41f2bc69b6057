use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::IngestError;

/// Download `url` into `cache_dir` unless a cached copy exists, returning
/// the local path. The cache key is the SHA-256 of the URL.
pub fn fetch_csv(url: &str, cache_dir: impl AsRef<Path>) -> Result<PathBuf, IngestError> {
    let cache_dir = cache_dir.as_ref();
    let key: String = Sha256::digest(url.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    let path = cache_dir.join(format!("{key}.csv"));
    if path.exists() {
        log::info!("using cached {}", path.display());
        return Ok(path);
    }
    if !url.starts_with("https://") {
        return Err(IngestError::Fetch(format!("refusing non-HTTPS url {url}")));
    }
    let io = |source| IngestError::Io {
        path: path.display().to_string(),
        source,
    };
    std::fs::create_dir_all(cache_dir).map_err(io)?;
    let body = reqwest::blocking::get(url)
        .and_then(|r| r.error_for_status())
        .and_then(|r| r.bytes())
        .map_err(|e| IngestError::Fetch(e.to_string()))?;
    let tmp = path.with_extension("part");
    std::fs::write(&tmp, &body).map_err(io)?;
    std::fs::rename(&tmp, &path).map_err(io)?;
    Ok(path)
}
