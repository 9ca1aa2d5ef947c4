//! Shared fixtures and brute-force oracles for integration tests.
#![allow(dead_code)]

use std::path::Path;

use dicom_core::value::PrimitiveValue;
use dicom_core::{DataElement, VR};
use dicom_dictionary_std::tags;
use dicom_object::meta::FileMetaTableBuilder;
use dicom_object::InMemDicomObject;
use mrdensity::BinaryMask3D;

pub const EXPLICIT_VR_LE: &str = "1.2.840.10008.1.2.1";
pub const IMPLICIT_VR_LE: &str = "1.2.840.10008.1.2";
pub const EXPLICIT_VR_BE: &str = "1.2.840.10008.1.2.2";
const MR_IMAGE_STORAGE: &str = "1.2.840.10008.5.1.4.1.1.4";

pub struct SliceSpec {
    pub instance: usize,
    pub position: [f64; 3],
    pub cosines: [f64; 6],
    pub pixel_spacing: [f64; 2],
    pub rows: usize,
    pub columns: usize,
    /// Row-major, column index fastest.
    pub pixels: Vec<u16>,
    pub rescale: Option<(f64, f64)>,
    pub transfer_syntax: &'static str,
}

fn ds(values: &[f64]) -> PrimitiveValue {
    PrimitiveValue::Strs(values.iter().map(|v| format!("{v}")).collect())
}

pub fn write_slice(path: &Path, s: &SliceSpec) {
    let mut obj = InMemDicomObject::new_empty();
    let uid = format!("2.25.1000.{}", s.instance);
    obj.put(DataElement::new(tags::SOP_CLASS_UID, VR::UI, PrimitiveValue::from(MR_IMAGE_STORAGE)));
    obj.put(DataElement::new(tags::SOP_INSTANCE_UID, VR::UI, PrimitiveValue::from(uid.as_str())));
    obj.put(DataElement::new(tags::MODALITY, VR::CS, PrimitiveValue::from("MR")));
    obj.put(DataElement::new(
        tags::INSTANCE_NUMBER,
        VR::IS,
        PrimitiveValue::from(s.instance.to_string()),
    ));
    obj.put(DataElement::new(tags::IMAGE_POSITION_PATIENT, VR::DS, ds(&s.position)));
    obj.put(DataElement::new(tags::IMAGE_ORIENTATION_PATIENT, VR::DS, ds(&s.cosines)));
    obj.put(DataElement::new(tags::PIXEL_SPACING, VR::DS, ds(&s.pixel_spacing)));
    obj.put(DataElement::new(tags::ROWS, VR::US, PrimitiveValue::from(s.rows as u16)));
    obj.put(DataElement::new(tags::COLUMNS, VR::US, PrimitiveValue::from(s.columns as u16)));
    obj.put(DataElement::new(tags::SAMPLES_PER_PIXEL, VR::US, PrimitiveValue::from(1u16)));
    obj.put(DataElement::new(
        tags::PHOTOMETRIC_INTERPRETATION,
        VR::CS,
        PrimitiveValue::from("MONOCHROME2"),
    ));
    obj.put(DataElement::new(tags::BITS_ALLOCATED, VR::US, PrimitiveValue::from(16u16)));
    obj.put(DataElement::new(tags::BITS_STORED, VR::US, PrimitiveValue::from(16u16)));
    obj.put(DataElement::new(tags::HIGH_BIT, VR::US, PrimitiveValue::from(15u16)));
    obj.put(DataElement::new(tags::PIXEL_REPRESENTATION, VR::US, PrimitiveValue::from(0u16)));
    if let Some((slope, intercept)) = s.rescale {
        obj.put(DataElement::new(tags::RESCALE_SLOPE, VR::DS, ds(&[slope])));
        obj.put(DataElement::new(tags::RESCALE_INTERCEPT, VR::DS, ds(&[intercept])));
    }
    obj.put(DataElement::new(
        tags::PIXEL_DATA,
        VR::OW,
        PrimitiveValue::U16(s.pixels.clone().into()),
    ));
    let file = obj
        .with_meta(FileMetaTableBuilder::new().transfer_syntax(s.transfer_syntax))
        .expect("meta table");
    file.write_to_file(path).expect("write DICOM");
}

/// Axial series of `nz` slices with pixel value `f(x, y, k)` at slice `k` in
/// file order; slice `k` sits at `z0 + k * dz` (dz may be negative).
pub fn write_axial_series(
    dir: &Path,
    dims: [usize; 3],
    z0: f64,
    dz: f64,
    transfer_syntax: &'static str,
    f: impl Fn(usize, usize, usize) -> u16,
) {
    let [nx, ny, nz] = dims;
    for k in 0..nz {
        let pixels = (0..ny)
            .flat_map(|y| (0..nx).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y, k))
            .collect();
        let spec = SliceSpec {
            instance: k + 1,
            position: [-10.0, -20.0, z0 + k as f64 * dz],
            cosines: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
            pixel_spacing: [0.75, 0.5],
            rows: ny,
            columns: nx,
            pixels,
            rescale: None,
            transfer_syntax,
        };
        // Reverse-alphabetical names so file order disagrees with geometry.
        write_slice(&dir.join(format!("img{:03}.dcm", nz - k)), &spec);
    }
}

pub fn brute_dice(a: &BinaryMask3D, b: &BinaryMask3D) -> f64 {
    let fa = a.foreground();
    let fb = b.foreground();
    let both = fa.iter().filter(|p| b.get(p[0], p[1], p[2])).count();
    2.0 * both as f64 / (fa.len() + fb.len()) as f64
}

/// Definitional symmetric Hausdorff distance over all voxel pairs.
pub fn brute_hausdorff(a: &BinaryMask3D, b: &BinaryMask3D, w: [f64; 3]) -> f64 {
    let fa = a.foreground();
    let fb = b.foreground();
    let directed = |from: &[[usize; 3]], to: &[[usize; 3]]| {
        from.iter()
            .map(|p| {
                to.iter()
                    .map(|q| {
                        (0..3)
                            .map(|k| {
                                let d = (p[k] as f64 - q[k] as f64) * w[k];
                                d * d
                            })
                            .sum::<f64>()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    directed(&fa, &fb).max(directed(&fb, &fa)).sqrt()
}

/// Ranks by explicit counting: 1 + #smaller + (#equal - 1) / 2.
pub fn brute_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let less = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn brute_spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&brute_ranks(x), &brute_ranks(y))
}

/// Tau-b from full pair enumeration.
pub fn brute_kendall(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let (mut conc, mut disc, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                continue;
            }
            if dx == 0.0 {
                tx += 1;
            } else if dy == 0.0 {
                ty += 1;
            } else if (dx > 0.0) == (dy > 0.0) {
                conc += 1;
            } else {
                disc += 1;
            }
        }
    }
    let n0 = (conc + disc + tx) as f64;
    let n1 = (conc + disc + ty) as f64;
    (conc - disc) as f64 / (n0 * n1).sqrt()
}

/// Fraction of positive/negative pairs ranked correctly, ties counting half.
pub fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] && !labels[j] {
                pairs += 1.0;
                if si > sj {
                    wins += 1.0;
                } else if si == sj {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}
