//! DICOM series ingestion into LPS-oriented volumes.
//!
//! Only uncompressed little-endian, single-frame, single-sample images are
//! accepted. Slices are ordered along the slice normal (row x column cosine),
//! then every array axis is mapped onto its dominant patient axis and flipped
//! when it points toward a negative patient direction. For axial series this
//! reduces to reversing the slice order when the normal points toward -z.

use std::fs;
use std::path::{Path, PathBuf};

use dicom_core::value::{PrimitiveValue, Value};
use dicom_core::header::HasLength;
use dicom_core::Tag;
use dicom_dictionary_std::tags;
use dicom_object::{open_file, DefaultDicomObject};

use crate::error::{Error, Result};
use crate::volume::{linear_index, Volume3D};

const IMPLICIT_VR_LE: &str = "1.2.840.10008.1.2";
const EXPLICIT_VR_LE: &str = "1.2.840.10008.1.2.1";

/// Geometric tolerance (mm) below which two slice positions are considered equal.
const POSITION_EPS: f64 = 1e-4;
const COSINE_NORM_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesMeta {
    /// Patient z coordinate (mm) of each output slice, ascending.
    pub slice_positions: Vec<f64>,
    /// Row direction cosines followed by column direction cosines.
    pub orientation_cosines: [f64; 6],
    /// (row spacing, column spacing) in mm.
    pub pixel_spacing: [f64; 2],
    /// (slope, intercept).
    pub rescale: (f64, f64),
    /// Source file per output slice.
    pub source_ids: Vec<String>,
}

/// One decoded image with the header fields the assembler needs.
#[derive(Debug, Clone)]
pub struct SliceInfo {
    pub source: PathBuf,
    pub position: [f64; 3],
    pub cosines: [f64; 6],
    pub pixel_spacing: [f64; 2],
    pub rows: usize,
    pub columns: usize,
    pub rescale: (f64, f64),
    /// Stored values, row-major (column index fastest), before rescale.
    pub pixels: Vec<f64>,
}

pub fn load_dicom_series(dir: &Path) -> Result<(Volume3D, SeriesMeta)> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if !path.is_file() || name.starts_with('.') || name.eq_ignore_ascii_case("DICOMDIR") {
            continue;
        }
        files.push(path);
    }
    files.sort();
    let slices = files
        .iter()
        .map(|p| read_slice(p))
        .collect::<Result<Vec<_>>>()?;
    assemble_series(slices)
}

pub fn read_slice(path: &Path) -> Result<SliceInfo> {
    let obj = open_file(path).map_err(|e| Error::DicomParse {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let ts = obj.meta().transfer_syntax().trim_end_matches(['\0', ' ']);
    if ts != IMPLICIT_VR_LE && ts != EXPLICIT_VR_LE {
        return Err(Error::UnsupportedTransferSyntax {
            path: path.to_path_buf(),
            uid: ts.to_owned(),
        });
    }

    let field = FieldReader { obj: &obj, path };
    if let Some(frames) = field.optional_int(tags::NUMBER_OF_FRAMES, "NumberOfFrames")? {
        if frames != 1 {
            return Err(field.bad("NumberOfFrames", format!("multi-frame ({frames}) not supported")));
        }
    }
    if let Some(spp) = field.optional_int(tags::SAMPLES_PER_PIXEL, "SamplesPerPixel")? {
        if spp != 1 {
            return Err(field.bad("SamplesPerPixel", format!("{spp} samples per pixel")));
        }
    }
    let position = field.floats::<3>(tags::IMAGE_POSITION_PATIENT, "ImagePositionPatient")?;
    let cosines = field.floats::<6>(tags::IMAGE_ORIENTATION_PATIENT, "ImageOrientationPatient")?;
    let pixel_spacing = field.floats::<2>(tags::PIXEL_SPACING, "PixelSpacing")?;
    let rows = field.required_int(tags::ROWS, "Rows")? as usize;
    let columns = field.required_int(tags::COLUMNS, "Columns")? as usize;
    let slope = field
        .optional_float(tags::RESCALE_SLOPE, "RescaleSlope")?
        .unwrap_or(1.0);
    let intercept = field
        .optional_float(tags::RESCALE_INTERCEPT, "RescaleIntercept")?
        .unwrap_or(0.0);
    let bits = field
        .optional_int(tags::BITS_ALLOCATED, "BitsAllocated")?
        .unwrap_or(16);
    let signed = field
        .optional_int(tags::PIXEL_REPRESENTATION, "PixelRepresentation")?
        .unwrap_or(0)
        == 1;

    for (i, c) in [&cosines[..3], &cosines[3..]].into_iter().enumerate() {
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > COSINE_NORM_TOL {
            return Err(field.bad(
                "ImageOrientationPatient",
                format!("direction cosine {i} has norm {norm:.6}"),
            ));
        }
    }
    if pixel_spacing.iter().any(|&s| !(s > 0.0)) {
        return Err(field.bad("PixelSpacing", format!("non-positive spacing {pixel_spacing:?}")));
    }

    let elem = obj
        .element_opt(tags::PIXEL_DATA)
        .ok()
        .flatten()
        .ok_or_else(|| field.missing("PixelData"))?;
    let pixels = decode_pixels(elem.value(), bits, signed)
        .map_err(|reason| field.bad("PixelData", reason))?;
    if pixels.len() < rows * columns {
        return Err(field.bad(
            "PixelData",
            format!("{} samples for {rows}x{columns} image", pixels.len()),
        ));
    }
    let mut pixels = pixels;
    pixels.truncate(rows * columns);

    Ok(SliceInfo {
        source: path.to_path_buf(),
        position,
        cosines,
        pixel_spacing,
        rows,
        columns,
        rescale: (slope, intercept),
        pixels,
    })
}

fn decode_pixels(value: &Value<dicom_object::InMemDicomObject>, bits: i64, signed: bool) -> std::result::Result<Vec<f64>, String> {
    let prim = match value {
        Value::Primitive(p) => p,
        _ => return Err("encapsulated pixel data is not supported".into()),
    };
    let out = match (bits, prim) {
        (16, PrimitiveValue::U16(v)) if signed => v.iter().map(|&x| x as i16 as f64).collect(),
        (16, PrimitiveValue::U16(v)) => v.iter().map(|&x| x as f64).collect(),
        (16, PrimitiveValue::I16(v)) if signed => v.iter().map(|&x| x as f64).collect(),
        (16, PrimitiveValue::I16(v)) => v.iter().map(|&x| x as u16 as f64).collect(),
        (16, PrimitiveValue::U8(b)) => b
            .chunks_exact(2)
            .map(|c| {
                let raw = u16::from_le_bytes([c[0], c[1]]);
                if signed {
                    raw as i16 as f64
                } else {
                    raw as f64
                }
            })
            .collect(),
        (8, PrimitiveValue::U8(b)) if signed => b.iter().map(|&x| x as i8 as f64).collect(),
        (8, PrimitiveValue::U8(b)) => b.iter().map(|&x| x as f64).collect(),
        (bits, _) => return Err(format!("unsupported BitsAllocated {bits} / value layout")),
    };
    Ok(out)
}

struct FieldReader<'a> {
    obj: &'a DefaultDicomObject,
    path: &'a Path,
}

impl FieldReader<'_> {
    fn missing(&self, tag: &'static str) -> Error {
        Error::MissingTag {
            path: self.path.to_path_buf(),
            tag,
        }
    }

    fn bad(&self, tag: &'static str, reason: impl Into<String>) -> Error {
        Error::BadTag {
            path: self.path.to_path_buf(),
            tag,
            reason: reason.into(),
        }
    }

    fn get(&self, tag: Tag) -> Option<&dicom_object::mem::InMemElement> {
        self.obj.element_opt(tag).ok().flatten()
    }

    fn floats<const N: usize>(&self, tag: Tag, name: &'static str) -> Result<[f64; N]> {
        let elem = self.get(tag).ok_or_else(|| self.missing(name))?;
        let values = elem
            .to_multi_float64()
            .map_err(|e| self.bad(name, e.to_string()))?;
        if values.len() != N {
            return Err(self.bad(name, format!("expected {N} values, found {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(self.bad(name, "non-finite value"));
        }
        let mut out = [0.0; N];
        out.copy_from_slice(&values);
        Ok(out)
    }

    fn optional_float(&self, tag: Tag, name: &'static str) -> Result<Option<f64>> {
        match self.get(tag) {
            None => Ok(None),
            Some(e) if e.value().primitive().is_some_and(|p| p.is_empty()) => Ok(None),
            Some(e) => e
                .to_float64()
                .map(Some)
                .map_err(|err| self.bad(name, err.to_string())),
        }
    }

    fn required_int(&self, tag: Tag, name: &'static str) -> Result<i64> {
        self.optional_int(tag, name)?
            .ok_or_else(|| self.missing(name))
    }

    fn optional_int(&self, tag: Tag, name: &'static str) -> Result<Option<i64>> {
        match self.get(tag) {
            None => Ok(None),
            Some(e) => e
                .to_int::<i64>()
                .map(Some)
                .map_err(|err| self.bad(name, err.to_string())),
        }
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Which patient axis an array axis runs along, and in which direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct AxisMap {
    patient_axis: usize,
    flipped: bool,
}

fn dominant_axis(v: [f64; 3]) -> AxisMap {
    let mut best = 0;
    for k in 1..3 {
        if v[k].abs() > v[best].abs() {
            best = k;
        }
    }
    AxisMap {
        patient_axis: best,
        flipped: v[best] < 0.0,
    }
}

/// Orders decoded slices, applies rescale and reorients to LPS.
pub fn assemble_series(mut slices: Vec<SliceInfo>) -> Result<(Volume3D, SeriesMeta)> {
    if slices.len() < 2 {
        return Err(Error::TooFewSlices(slices.len()));
    }
    let first = slices[0].clone();
    for s in &slices[1..] {
        let name = s.source.display();
        if s.rows != first.rows || s.columns != first.columns {
            return Err(Error::InconsistentSeries(format!(
                "{name}: {}x{} image, expected {}x{}",
                s.rows, s.columns, first.rows, first.columns
            )));
        }
        if !close(&s.pixel_spacing, &first.pixel_spacing, 1e-4) {
            return Err(Error::InconsistentSeries(format!(
                "{name}: PixelSpacing {:?}, expected {:?}",
                s.pixel_spacing, first.pixel_spacing
            )));
        }
        if !close(&s.cosines, &first.cosines, 1e-4) {
            return Err(Error::InconsistentSeries(format!(
                "{name}: ImageOrientationPatient differs from {}",
                first.source.display()
            )));
        }
    }

    let row_dir = [first.cosines[0], first.cosines[1], first.cosines[2]];
    let col_dir = [first.cosines[3], first.cosines[4], first.cosines[5]];
    let normal = cross(row_dir, col_dir);

    slices.sort_by(|a, b| dot(a.position, normal).total_cmp(&dot(b.position, normal)));
    for pair in slices.windows(2) {
        let (da, db) = (dot(pair[0].position, normal), dot(pair[1].position, normal));
        if (db - da).abs() < POSITION_EPS {
            return Err(Error::DuplicateSlice {
                position: da,
                first: pair[0].source.clone(),
                second: pair[1].source.clone(),
            });
        }
    }
    let n = slices.len();
    let span = dot(slices[n - 1].position, normal) - dot(slices[0].position, normal);
    let slice_spacing = span / (n - 1) as f64;
    for pair in slices.windows(2) {
        let gap = dot(pair[1].position, normal) - dot(pair[0].position, normal);
        if (gap - slice_spacing).abs() > 0.01 * slice_spacing {
            log::warn!(
                "non-uniform slice spacing: {gap:.4} mm vs mean {slice_spacing:.4} mm near {}",
                pair[1].source.display()
            );
            break;
        }
    }

    // Source array axes: i along the row direction (columns), j along the
    // column direction (rows), k along the slice normal.
    let src_dims = [first.columns, first.rows, n];
    let src_spacing = [first.pixel_spacing[1], first.pixel_spacing[0], slice_spacing];
    let maps = [
        dominant_axis(row_dir),
        dominant_axis(col_dir),
        dominant_axis(normal),
    ];
    let mut seen = [false; 3];
    for m in &maps {
        if seen[m.patient_axis] {
            return Err(Error::InconsistentSeries(
                "oblique orientation: array axes do not map onto distinct patient axes".into(),
            ));
        }
        seen[m.patient_axis] = true;
    }

    let mut out_dims = [0usize; 3];
    let mut out_spacing = [0f64; 3];
    for (a, m) in maps.iter().enumerate() {
        out_dims[m.patient_axis] = src_dims[a];
        out_spacing[m.patient_axis] = src_spacing[a];
    }

    let mut voxels = vec![0f64; src_dims[0] * src_dims[1] * src_dims[2]];
    for (k, slice) in slices.iter().enumerate() {
        let (slope, intercept) = slice.rescale;
        for j in 0..src_dims[1] {
            for i in 0..src_dims[0] {
                let src = [i, j, k];
                let mut dst = [0usize; 3];
                for (a, m) in maps.iter().enumerate() {
                    dst[m.patient_axis] = if m.flipped {
                        src_dims[a] - 1 - src[a]
                    } else {
                        src[a]
                    };
                }
                let raw = slice.pixels[j * src_dims[0] + i];
                voxels[linear_index(out_dims, dst[0], dst[1], dst[2])] = raw * slope + intercept;
            }
        }
    }

    // Invert the map for the output z axis to recover world positions.
    let z_src_axis = maps.iter().position(|m| m.patient_axis == 2).unwrap();
    let z_map = maps[z_src_axis];
    let mut slice_positions = Vec::with_capacity(out_dims[2]);
    let mut source_ids = Vec::with_capacity(out_dims[2]);
    for kz in 0..out_dims[2] {
        let src_idx = if z_map.flipped {
            src_dims[z_src_axis] - 1 - kz
        } else {
            kz
        };
        let mut src = [0usize; 3];
        src[z_src_axis] = src_idx;
        let slice = &slices[src[2]];
        let world_z = slice.position[2]
            + src[0] as f64 * src_spacing[0] * row_dir[2]
            + src[1] as f64 * src_spacing[1] * col_dir[2];
        slice_positions.push(world_z);
        source_ids.push(slice.source.display().to_string());
    }

    let volume = Volume3D::new(out_dims, out_spacing, voxels)?;
    let meta = SeriesMeta {
        slice_positions,
        orientation_cosines: first.cosines,
        pixel_spacing: first.pixel_spacing,
        rescale: first.rescale,
        source_ids,
    };
    Ok((volume, meta))
}
