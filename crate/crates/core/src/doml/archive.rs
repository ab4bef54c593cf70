//! Input handling: a DOML file is delivered either as plain text or inside a
//! ZIP archive holding exactly one `.doml` entry.

use std::io::{Cursor, Read};
use std::path::Path;

use super::error::ArchiveError;

const ZIP_MAGIC: [&[u8]; 2] = [b"PK\x03\x04", b"PK\x05\x06"];

fn is_zip(bytes: &[u8]) -> bool {
    ZIP_MAGIC.iter().any(|m| bytes.starts_with(m))
}

pub fn read_input_archive(path: impl AsRef<Path>) -> Result<String, ArchiveError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| ArchiveError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if !is_zip(&bytes) {
        return String::from_utf8(bytes).map_err(|_| ArchiveError::NotUtf8 {
            path: path.to_path_buf(),
        });
    }
    let zip_err = |e: zip::result::ZipError| ArchiveError::Zip {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut archive = zip::ZipArchive::new(Cursor::new(bytes)).map_err(zip_err)?;
    let entries: Vec<String> = archive
        .file_names()
        .filter(|n| !n.ends_with('/') && n.to_ascii_lowercase().ends_with(".doml"))
        .map(str::to_string)
        .collect();
    let entry = match entries.as_slice() {
        [] => return Err(ArchiveError::NoDomlEntry { path: path.to_path_buf() }),
        [one] => one.clone(),
        _ => {
            let mut entries = entries;
            entries.sort();
            return Err(ArchiveError::AmbiguousDomlEntries {
                path: path.to_path_buf(),
                entries,
            });
        }
    };
    let mut file = archive.by_name(&entry).map_err(zip_err)?;
    let mut raw = Vec::new();
    file.read_to_end(&mut raw).map_err(|source| ArchiveError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    String::from_utf8(raw).map_err(|_| ArchiveError::NotUtf8 {
        path: path.to_path_buf(),
    })
}
