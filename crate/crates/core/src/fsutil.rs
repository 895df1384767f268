//! Small filesystem helpers shared by every writer in the crate.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Writes `bytes` to a sibling temp file and renames it over `path`, so a
/// reader never observes a truncated file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display(), e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("{}: not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(tmp.display(), e))?;
        f.write_all(bytes).map_err(|e| Error::io(tmp.display(), e))?;
        f.sync_all().map_err(|e| Error::io(tmp.display(), e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path.display(), e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Schema(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display(), e))?;
    serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

/// Parses the `{"format": .., "version": ..}` record that opens every
/// JSON-lines file written by this crate.
pub(crate) fn check_header(line: &str, format: &str, version: u32, origin: &str) -> Result<()> {
    #[derive(serde::Deserialize)]
    struct Header {
        format: String,
        version: u32,
    }
    let h: Header = serde_json::from_str(line)
        .map_err(|e| Error::Schema(format!("{origin}: bad header line: {e}")))?;
    if h.format != format {
        return Err(Error::Schema(format!("{origin}: expected format {format}, got {}", h.format)));
    }
    if h.version != version {
        return Err(Error::Schema(format!(
            "{origin}: unsupported {format} version {} (expected {version})",
            h.version
        )));
    }
    Ok(())
}

pub(crate) fn header_line(format: &str, version: u32) -> String {
    serde_json::json!({ "format": format, "version": version }).to_string()
}

/// Encodes an image as PNG in memory, then writes it atomically.
pub fn write_png(path: &Path, img: &crate::imaging::GrayImage) -> Result<()> {
    let dir = tempfile_dir(path)?;
    let tmp = dir.join(format!(
        ".{}.png.tmp",
        path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
    ));
    img.save_png(&tmp)?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path.display(), e))
}

fn tempfile_dir(path: &Path) -> Result<&Path> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display(), e))?;
    Ok(dir)
}
