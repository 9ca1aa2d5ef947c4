//! Portable volume format: a JSON header next to a raw little-endian payload.
//!
//! ```json
//! {"dims":[64,64,32],"spacing_mm":[0.7,0.7,1.5],"orientation":"LPS","dtype":"f32","data_file":"vol.raw"}
//! ```
//!
//! `data_file` is resolved relative to the header's directory. Volumes are
//! written as `f32`, masks as `u8`; both are x-fastest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{voxel_count, BinaryMask3D, Dims, Orientation, Volume3D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    U8,
}

impl Dtype {
    fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::U8 => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortableHeader {
    pub dims: Dims,
    pub spacing_mm: [f64; 3],
    pub orientation: Orientation,
    pub dtype: Dtype,
    pub data_file: String,
}

impl PortableHeader {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        // Checked separately so an unknown dtype gets its own error.
        if let Ok(serde_json::Value::Object(map)) = serde_json::from_str(&text) {
            if let Some(serde_json::Value::String(dt)) = map.get("dtype") {
                if dt != "f32" && dt != "u8" {
                    return Err(Error::UnsupportedDtype(dt.clone()));
                }
            }
        }
        serde_json::from_str(&text).map_err(|e| Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    fn data_path(&self, header: &Path) -> PathBuf {
        header
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(&self.data_file)
    }
}

/// Payload file name derived from the header path (`x.json` -> `x.raw`).
fn default_data_file(header: &Path) -> String {
    let stem = header
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "volume".to_owned());
    format!("{stem}.raw")
}

fn write_pair(header_path: &Path, header: &PortableHeader, payload: &[u8]) -> Result<()> {
    if let Some(dir) = header_path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let data_path = header.data_path(header_path);
    fs::write(&data_path, payload).map_err(|e| Error::io(&data_path, e))?;
    let mut text = serde_json::to_string_pretty(header).expect("header serializes");
    text.push('\n');
    fs::write(header_path, text).map_err(|e| Error::io(header_path, e))
}

fn read_payload(header_path: &Path) -> Result<(PortableHeader, Vec<u8>)> {
    let header = PortableHeader::read(header_path)?;
    if header.dims.contains(&0) || header.spacing_mm.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::MalformedHeader {
            path: header_path.to_path_buf(),
            reason: "dims and spacing must be positive".into(),
        });
    }
    let data_path = header.data_path(header_path);
    let bytes = fs::read(&data_path).map_err(|e| Error::io(&data_path, e))?;
    let expected = voxel_count(header.dims);
    let size = header.dtype.size();
    if bytes.len() != expected * size {
        return Err(Error::ElementCount {
            expected,
            found: bytes.len() / size,
        });
    }
    Ok((header, bytes))
}

/// Writes `volume` as f32. Values not representable in f32 are rounded to nearest.
pub fn save_portable_volume(volume: &Volume3D, header_path: &Path) -> Result<()> {
    let header = PortableHeader {
        dims: volume.dims(),
        spacing_mm: volume.spacing(),
        orientation: volume.orientation(),
        dtype: Dtype::F32,
        data_file: default_data_file(header_path),
    };
    let mut payload = Vec::with_capacity(volume.len() * 4);
    for &v in volume.voxels() {
        payload.extend_from_slice(&(v as f32).to_le_bytes());
    }
    write_pair(header_path, &header, &payload)
}

pub fn load_portable_volume(header_path: &Path) -> Result<Volume3D> {
    let (header, bytes) = read_payload(header_path)?;
    let voxels = match header.dtype {
        Dtype::F32 => bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
        Dtype::U8 => bytes.iter().map(|&b| b as f64).collect(),
    };
    Volume3D::new(header.dims, header.spacing_mm, voxels)
}

/// Writes a mask as u8. `spacing` is carried in the header for downstream tools.
pub fn save_mask(mask: &BinaryMask3D, spacing: [f64; 3], header_path: &Path) -> Result<()> {
    let header = PortableHeader {
        dims: mask.dims(),
        spacing_mm: spacing,
        orientation: Orientation::Lps,
        dtype: Dtype::U8,
        data_file: default_data_file(header_path),
    };
    write_pair(header_path, &header, mask.voxels())
}

pub fn load_mask(header_path: &Path) -> Result<BinaryMask3D> {
    load_mask_with_spacing(header_path).map(|(m, _)| m)
}

pub fn load_mask_with_spacing(header_path: &Path) -> Result<(BinaryMask3D, [f64; 3])> {
    let (header, bytes) = read_payload(header_path)?;
    if header.dtype != Dtype::U8 {
        return Err(Error::UnsupportedDtype(format!(
            "{:?} (masks must be u8)",
            header.dtype
        )));
    }
    Ok((BinaryMask3D::new(header.dims, bytes)?, header.spacing_mm))
}
