//! Binary container for activation matrices and RDMs, plus the teacher
//! manifest used to ingest externally measured RDMs.
//!
//! Container layout (all integers little-endian):
//!
//! ```text
//! magic   4 bytes  "TGSA"
//! version u32      1
//! n_i     u32      rows (probe inputs)
//! n_a     u32      columns (features; equals n_i for an RDM)
//! data    n_i * n_a f32, row-major
//! ids     n_i newline-terminated UTF-8 input ids
//! cats    optional: n_i newline-terminated category labels
//! ```
//!
//! The category block is present exactly when bytes remain after the ids.
//! An RDM file is the same container with `n_a == n_i`; symmetry, a zero
//! diagonal, and the `[0, 2]` range are enforced at load.

use super::{ActivationMatrix, Rdm, RsaError, TeacherProvenance, TeacherRdm, TeacherSpec};
use crate::util::sha256_hex;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"TGSA";
pub const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("bad magic {found:?}, expected \"TGSA\"")]
    BadMagic { found: String },
    #[error("unsupported TGSA version {0}")]
    UnsupportedVersion(u32),
    #[error("file truncated while reading {0}")]
    Truncated(&'static str),
    #[error("id block is not valid UTF-8")]
    NonUtf8Id,
    #[error("expected {expected} ids, found {found}")]
    WrongIdCount { expected: usize, found: usize },
    #[error("trailing bytes after category block")]
    TrailingData,
    #[error("an RDM container requires n_a == n_i, got {n_i}x{n_a}")]
    NotSquare { n_i: usize, n_a: usize },
    #[error(transparent)]
    Rsa(#[from] RsaError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("teacher manifest: {0}")]
    Manifest(String),
}

fn write_header<W: Write>(w: &mut W, n_i: u32, n_a: u32) -> Result<(), FormatError> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&n_i.to_le_bytes())?;
    w.write_all(&n_a.to_le_bytes())?;
    Ok(())
}

fn write_body<W: Write>(
    w: &mut W,
    values: &[f64],
    ids: &[String],
    cats: Option<&[String]>,
) -> Result<(), FormatError> {
    let mut buf = Vec::with_capacity(values.len() * 4);
    for &v in values {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    for id in ids {
        w.write_all(id.as_bytes())?;
        w.write_all(b"\n")?;
    }
    if let Some(cats) = cats {
        for c in cats {
            w.write_all(c.as_bytes())?;
            w.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Serializes an activation matrix (values stored as 32-bit floats).
pub fn write_activation_matrix<W: Write>(
    mut w: W,
    m: &ActivationMatrix,
) -> Result<(), FormatError> {
    write_header(&mut w, m.n_inputs() as u32, m.n_features() as u32)?;
    write_body(&mut w, &m.values, m.input_ids(), m.category_ids())
}

/// Serializes an RDM in the same container (`n_a == n_i`).
pub fn write_rdm<W: Write>(mut w: W, rdm: &Rdm) -> Result<(), FormatError> {
    write_header(&mut w, rdm.n() as u32, rdm.n() as u32)?;
    write_body(&mut w, rdm.values(), rdm.ids(), None)
}

struct RawContainer {
    values: Vec<f64>,
    n_i: usize,
    n_a: usize,
    ids: Vec<String>,
    cats: Option<Vec<String>>,
}

fn read_container<R: Read>(mut r: R) -> Result<RawContainer, FormatError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 4 {
        return Err(FormatError::Truncated("magic"));
    }
    if &bytes[..4] != MAGIC {
        return Err(FormatError::BadMagic {
            found: String::from_utf8_lossy(&bytes[..4]).into_owned(),
        });
    }
    let mut off = 4;
    let mut read_u32 = |field: &'static str| -> Result<u32, FormatError> {
        if bytes.len() < off + 4 {
            return Err(FormatError::Truncated(field));
        }
        let v = u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
        off += 4;
        Ok(v)
    };
    let version = read_u32("version")?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let n_i = read_u32("n_i")? as usize;
    let n_a = read_u32("n_a")? as usize;
    let data_len = n_i * n_a * 4;
    if bytes.len() < off + data_len {
        return Err(FormatError::Truncated("data"));
    }
    let values: Vec<f64> = bytes[off..off + data_len]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    let tail = &bytes[off + data_len..];
    let text = std::str::from_utf8(tail).map_err(|_| FormatError::NonUtf8Id)?;
    if !text.is_empty() && !text.ends_with('\n') {
        return Err(FormatError::Truncated("ids"));
    }
    let lines: Vec<String> = text.lines().map(str::to_string).collect();
    let (ids, cats) = if lines.len() == n_i {
        (lines, None)
    } else if lines.len() == 2 * n_i {
        let cats = lines[n_i..].to_vec();
        (lines[..n_i].to_vec(), Some(cats))
    } else if lines.len() < n_i {
        return Err(FormatError::WrongIdCount { expected: n_i, found: lines.len() });
    } else {
        return Err(FormatError::TrailingData);
    };
    Ok(RawContainer { values, n_i, n_a, ids, cats })
}

/// Loads an activation matrix.
pub fn read_activation_matrix<R: Read>(r: R) -> Result<ActivationMatrix, FormatError> {
    let raw = read_container(r)?;
    Ok(ActivationMatrix::new(raw.values, raw.n_i, raw.n_a, raw.ids, raw.cats)?)
}

/// Loads an RDM, enforcing squareness and every RDM invariant.
pub fn read_rdm<R: Read>(r: R) -> Result<Rdm, FormatError> {
    let raw = read_container(r)?;
    if raw.n_i != raw.n_a {
        return Err(FormatError::NotSquare { n_i: raw.n_i, n_a: raw.n_a });
    }
    Ok(Rdm::new(raw.values, raw.ids)?)
}

/// Hash identifying a probe set: SHA-256 of the newline-joined input ids.
pub fn probe_set_hash(ids: &[String]) -> String {
    sha256_hex(ids.join("\n").as_bytes())
}

/// One manifest row naming a teacher RDM file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TeacherManifestEntry {
    pub name: String,
    pub file: String,
    pub provenance: TeacherProvenance,
}

/// Manifest listing teacher RDM files and the probe-set hash they were
/// computed on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TeacherManifest {
    pub probe_hash: String,
    pub teachers: Vec<TeacherManifestEntry>,
}

impl TeacherManifest {
    pub fn load(path: &Path) -> Result<TeacherManifest, FormatError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| FormatError::Manifest(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), FormatError> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| FormatError::Manifest(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Loads every referenced RDM (paths relative to the manifest) and checks
    /// that all of them share a probe set matching `probe_hash`.
    pub fn load_teacher(&self, manifest_path: &Path) -> Result<TeacherSpec, FormatError> {
        let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
        let mut entries = Vec::with_capacity(self.teachers.len());
        for t in &self.teachers {
            let file = dir.join(&t.file);
            let rdm = read_rdm(std::fs::File::open(&file)?)?;
            let hash = probe_set_hash(rdm.ids());
            if hash != self.probe_hash {
                return Err(FormatError::Manifest(format!(
                    "probe hash of {} is {hash}, manifest says {}",
                    t.file, self.probe_hash
                )));
            }
            entries.push(TeacherRdm { name: t.name.clone(), rdm, provenance: t.provenance });
        }
        Ok(TeacherSpec::new(entries)?)
    }
}

/// Writes a teacher spec as RDM files plus a manifest in `dir`.
pub fn save_teacher(teacher: &TeacherSpec, dir: &Path) -> Result<TeacherManifest, FormatError> {
    std::fs::create_dir_all(dir)?;
    let mut manifest = TeacherManifest {
        probe_hash: probe_set_hash(teacher.probe_ids()),
        teachers: Vec::new(),
    };
    for entry in teacher.entries() {
        let file = format!("{}.rdm.tgsa", entry.name);
        write_rdm(std::fs::File::create(dir.join(&file))?, &entry.rdm)?;
        manifest.teachers.push(TeacherManifestEntry {
            name: entry.name.clone(),
            file,
            provenance: entry.provenance,
        });
    }
    manifest.save(&dir.join("manifest.json"))?;
    Ok(manifest)
}

/// Loads a teacher spec from a manifest path.
pub fn load_teacher_from_manifest(path: &Path) -> Result<TeacherSpec, FormatError> {
    TeacherManifest::load(path)?.load_teacher(path)
}
