//! IDX (MNIST-style) dataset reader: big-endian magic 0x00000803 for image
//! files and 0x00000801 for label files.

use std::path::Path;

use anyhow::{bail, Context, Result};
use restrain_core::numkit::Field2D;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32> {
    let end = at + 4;
    if bytes.len() < end {
        bail!("truncated IDX header reading {what}: need {end} bytes, file has {}", bytes.len());
    }
    Ok(u32::from_be_bytes(bytes[at..end].try_into().unwrap()))
}

/// Raw image file: `n` matrices of `rows x cols` bytes.
pub fn read_images(path: &Path) -> Result<Vec<Field2D>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let magic = be_u32(&bytes, 0, "magic")?;
    if magic != IMAGE_MAGIC {
        bail!("bad image magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}");
    }
    let n = be_u32(&bytes, 4, "count")? as usize;
    let rows = be_u32(&bytes, 8, "rows")? as usize;
    let cols = be_u32(&bytes, 12, "cols")? as usize;
    let expected = 16 + n * rows * cols;
    if bytes.len() != expected {
        bail!(
            "truncated IDX image file: expected {expected} bytes ({n} images of {rows}x{cols}), got {}",
            bytes.len()
        );
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let start = 16 + i * rows * cols;
        let values = bytes[start..start + rows * cols]
            .iter()
            .map(|&b| b as f64 / 255.0)
            .collect();
        out.push(Field2D::new(values, rows, cols));
    }
    Ok(out)
}

/// Raw label file: `n` bytes.
pub fn read_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let magic = be_u32(&bytes, 0, "magic")?;
    if magic != LABEL_MAGIC {
        bail!("bad label magic {magic:#010x}, expected {LABEL_MAGIC:#010x}");
    }
    let n = be_u32(&bytes, 4, "count")? as usize;
    let expected = 8 + n;
    if bytes.len() != expected {
        bail!("truncated IDX label file: expected {expected} bytes ({n} labels), got {}", bytes.len());
    }
    Ok(bytes[8..].to_vec())
}

/// Paired dataset, filtered to the requested labels with order preserved.
/// Pixel values are scaled to `[0, 1]`; labels are reported as `f64`.
pub fn load_idx(
    images_path: &Path,
    labels_path: &Path,
    filter_labels: &[u8],
) -> Result<Vec<(Field2D, f64)>> {
    let images = read_images(images_path)?;
    let labels = read_labels(labels_path)?;
    if images.len() != labels.len() {
        bail!(
            "image/label count mismatch: {} images vs {} labels",
            images.len(),
            labels.len()
        );
    }
    Ok(images
        .into_iter()
        .zip(labels)
        .filter(|(_, l)| filter_labels.contains(l))
        .map(|(img, l)| (img, l as f64))
        .collect())
}

/// Serialize fields (clamped to `[0, 1]`, stored as bytes) and labels into
/// the IDX pair format. Used by tests and fixture generation.
pub fn write_idx(
    images_path: &Path,
    labels_path: &Path,
    data: &[(Field2D, u8)],
) -> Result<()> {
    assert!(!data.is_empty());
    let (rows, cols) = data[0].0.shape();
    let mut img = Vec::with_capacity(16 + data.len() * rows * cols);
    img.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    img.extend_from_slice(&(data.len() as u32).to_be_bytes());
    img.extend_from_slice(&(rows as u32).to_be_bytes());
    img.extend_from_slice(&(cols as u32).to_be_bytes());
    let mut lab = Vec::with_capacity(8 + data.len());
    lab.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    lab.extend_from_slice(&(data.len() as u32).to_be_bytes());
    for (field, label) in data {
        assert_eq!(field.shape(), (rows, cols));
        img.extend(
            field
                .values()
                .iter()
                .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
        );
        lab.push(*label);
    }
    std::fs::write(images_path, img)?;
    std::fs::write(labels_path, lab)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use restrain_core::numkit::Field2D;

    fn fixture(dir: &Path, data: &[(Field2D, u8)]) -> (std::path::PathBuf, std::path::PathBuf) {
        let img = dir.join("imgs.idx");
        let lab = dir.join("labels.idx");
        write_idx(&img, &lab, data).unwrap();
        (img, lab)
    }

    #[test]
    fn round_trips_a_two_image_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let a = Field2D::new(vec![0.0, 1.0, 0.5, 0.2], 2, 2);
        let b = Field2D::new(vec![1.0, 1.0, 0.0, 0.0], 2, 2);
        let (img, lab) = fixture(dir.path(), &[(a, 0), (b, 1)]);
        let ds = load_idx(&img, &lab, &[0, 1]).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds[0].1, 0.0);
        assert_eq!(ds[1].1, 1.0);
        // bytes/255 round-trip (0.5 -> 128/255)
        assert_eq!(ds[0].0.at(0, 1), 1.0);
        assert!((ds[0].0.at(1, 0) - 128.0 / 255.0).abs() < 1e-12);
    }

    #[test]
    fn filters_labels_preserving_order() {
        let dir = tempfile::tempdir().unwrap();
        let f = |v: f64| Field2D::constant(2, 2, v);
        let (img, lab) = fixture(dir.path(), &[(f(0.1), 0), (f(0.2), 2), (f(0.3), 1)]);
        let ds = load_idx(&img, &lab, &[0, 1]).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds[0].1, 0.0);
        assert_eq!(ds[1].1, 1.0);
        assert!((ds[1].0.at(0, 0) - (0.3f64 * 255.0).round() / 255.0).abs() < 1e-12);
    }

    #[test]
    fn bad_magic_and_truncation_are_named_errors() {
        let dir = tempfile::tempdir().unwrap();
        let (img, lab) = fixture(dir.path(), &[(Field2D::constant(2, 2, 0.5), 1)]);
        // wrong magic
        let mut bytes = std::fs::read(&img).unwrap();
        bytes[3] = 0x01;
        std::fs::write(&img, &bytes).unwrap();
        let err = read_images(&img).unwrap_err();
        assert!(format!("{err}").contains("magic"));
        // truncated: error must name expected vs actual length
        let lab_bytes = std::fs::read(&lab).unwrap();
        std::fs::write(&lab, &lab_bytes[..lab_bytes.len() - 1]).unwrap();
        let err = read_labels(&lab).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("expected 9 bytes") && msg.contains("got 8"), "{msg}");
    }

    #[test]
    fn count_mismatch_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let (img, _) = fixture(dir.path(), &[(Field2D::constant(2, 2, 0.5), 1)]);
        let (_, lab2) = {
            let img2 = dir.path().join("i2.idx");
            let lab2 = dir.path().join("l2.idx");
            write_idx(
                &img2,
                &lab2,
                &[(Field2D::constant(2, 2, 0.1), 0), (Field2D::constant(2, 2, 0.2), 1)],
            )
            .unwrap();
            (img2, lab2)
        };
        assert!(load_idx(&img, &lab2, &[0, 1]).is_err());
    }
}
