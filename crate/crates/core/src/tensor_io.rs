//! Dense tensor types and the on-disk bundle container.
//!
//! A bundle is a directory holding `manifest.json` and one raw payload per
//! tensor:
//!
//! ```text
//! { "version": 1, "tensors": { "<name>": { "dtype": "f32", "shape": [..], "file": "<name>.bin" } } }
//! ```
//!
//! Payloads are little-endian IEEE-754 `f32`, row-major, with no header or
//! padding. Bytes are produced with `to_le_bytes`, so the layout does not
//! depend on host endianness.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

/// Values this far outside `[0, 1]` are clamped on load; anything further is rejected.
pub const MASK_SLACK: f32 = 1e-6;

/// Dense `H x W x C` feature map in raster order, channel innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl FeatureMap {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::Shape(format!(
                "feature map dims must be positive, got {height}x{width}x{channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::Shape(format!(
                "feature map {height}x{width}x{channels} needs {} values, got {}",
                height * width * channels,
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                name: "features".into(),
                index,
            });
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Number of visual tokens, `H * W`.
    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Feature vector of the token at flattened raster index `i`.
    pub fn token(&self, i: usize) -> &[f32] {
        &self.data[i * self.channels..(i + 1) * self.channels]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor {
            shape: vec![self.height, self.width, self.channels],
            data: self.data.clone(),
        }
    }
}

/// Stack of `count` probability maps over an `h x w` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskStack {
    count: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl MaskStack {
    /// Strict constructor: every value must lie in `[0, 1]`.
    pub fn new(count: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        Self::check_dims(count, height, width, data.len())?;
        for (index, &value) in data.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::MaskRange {
                    name: "masks".into(),
                    index,
                    value,
                });
            }
        }
        Ok(Self {
            count,
            height,
            width,
            data,
        })
    }

    /// Accepts values up to [`MASK_SLACK`] outside `[0, 1]` and clamps them.
    pub fn with_slack(
        name: &str,
        count: usize,
        height: usize,
        width: usize,
        mut data: Vec<f32>,
    ) -> Result<Self> {
        Self::check_dims(count, height, width, data.len())?;
        for (index, value) in data.iter_mut().enumerate() {
            if !(-MASK_SLACK..=1.0 + MASK_SLACK).contains(value) {
                return Err(Error::MaskRange {
                    name: name.into(),
                    index,
                    value: *value,
                });
            }
            *value = value.clamp(0.0, 1.0);
        }
        Ok(Self {
            count,
            height,
            width,
            data,
        })
    }

    fn check_dims(count: usize, height: usize, width: usize, len: usize) -> Result<()> {
        if count == 0 || height == 0 || width == 0 {
            return Err(Error::Shape(format!(
                "mask stack dims must be positive, got {count}x{height}x{width}"
            )));
        }
        if len != count * height * width {
            return Err(Error::Shape(format!(
                "mask stack {count}x{height}x{width} needs {} values, got {len}",
                count * height * width
            )));
        }
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Probability map of query `q`, flattened in raster order.
    pub fn mask(&self, q: usize) -> &[f32] {
        let plane = self.height * self.width;
        &self.data[q * plane..(q + 1) * plane]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor {
            shape: vec![self.count, self.height, self.width],
            data: self.data.clone(),
        }
    }
}

/// Untyped `f32` tensor as stored in a bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {numel} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.data.iter().flat_map(|v| v.to_le_bytes()).collect()
    }
}

impl From<FeatureMap> for Tensor {
    fn from(map: FeatureMap) -> Self {
        Tensor {
            shape: vec![map.height, map.width, map.channels],
            data: map.data,
        }
    }
}

impl From<MaskStack> for Tensor {
    fn from(masks: MaskStack) -> Self {
        Tensor {
            shape: vec![masks.count, masks.height, masks.width],
            data: masks.data,
        }
    }
}

pub fn is_valid_name(name: &str) -> bool {
    !name.is_empty() && name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

/// Named set of tensors, ordered by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bundle {
    tensors: BTreeMap<String, Tensor>,
}

impl Bundle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, tensor: impl Into<Tensor>) -> Result<()> {
        if !is_valid_name(name) {
            return Err(Error::InvalidName(name.into()));
        }
        if self.tensors.contains_key(name) {
            return Err(Error::DuplicateName(name.into()));
        }
        self.tensors.insert(name.to_owned(), tensor.into());
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    fn require(&self, name: &str) -> Result<&Tensor> {
        self.get(name)
            .ok_or_else(|| Error::MissingTensor(name.into()))
    }

    /// Interprets `name` as an `H x W x C` feature map.
    pub fn feature_map(&self, name: &str) -> Result<FeatureMap> {
        let t = self.require(name)?;
        match t.shape[..] {
            [h, w, c] => FeatureMap::new(h, w, c, t.data.clone()).map_err(|e| rename(e, name)),
            _ => Err(Error::Shape(format!(
                "tensor `{name}` must be H x W x C, got shape {:?}",
                t.shape
            ))),
        }
    }

    /// Interprets `name` as an `N x h x w` mask stack, applying the load slack.
    pub fn mask_stack(&self, name: &str) -> Result<MaskStack> {
        let t = self.require(name)?;
        match t.shape[..] {
            [n, h, w] => MaskStack::with_slack(name, n, h, w, t.data.clone()),
            _ => Err(Error::Shape(format!(
                "tensor `{name}` must be N x h x w, got shape {:?}",
                t.shape
            ))),
        }
    }
}

fn rename(err: Error, name: &str) -> Error {
    match err {
        Error::NonFinite { index, .. } => Error::NonFinite {
            name: name.into(),
            index,
        },
        other => other,
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    tensors: BTreeMap<String, ManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    dtype: String,
    shape: Vec<usize>,
    file: String,
}

/// Writes `bundle` into directory `dir`, creating it if needed.
pub fn write_bundle(dir: impl AsRef<Path>, bundle: &Bundle) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut manifest = Manifest {
        version: MANIFEST_VERSION,
        tensors: BTreeMap::new(),
    };
    for (name, tensor) in bundle.iter() {
        let file = format!("{name}.bin");
        let path = dir.join(&file);
        fs::write(&path, tensor.to_le_bytes()).map_err(|e| Error::io(&path, e))?;
        manifest.tensors.insert(
            name.to_owned(),
            ManifestEntry {
                dtype: "f32".into(),
                shape: tensor.shape.clone(),
                file,
            },
        );
    }
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Reads a bundle. Every payload is checked against its manifest shape and
/// must hold only finite values.
pub fn read_bundle(dir: impl AsRef<Path>) -> Result<Bundle> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Manifest {
        path: manifest_path.clone(),
        message: e.to_string(),
    })?;
    if manifest.version != MANIFEST_VERSION {
        return Err(Error::Manifest {
            path: manifest_path,
            message: format!("unsupported version {}", manifest.version),
        });
    }

    let mut bundle = Bundle::new();
    for (name, entry) in manifest.tensors {
        if entry.dtype != "f32" {
            return Err(Error::Manifest {
                path: manifest_path,
                message: format!("tensor `{name}` has unsupported dtype `{}`", entry.dtype),
            });
        }
        let path = payload_path(dir, &entry.file, &manifest_path)?;
        let bytes = match fs::read(&path) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(Error::MissingPayload { name, path })
            }
            Err(e) => return Err(Error::io(&path, e)),
        };
        let numel: usize = entry.shape.iter().product();
        if bytes.len() != numel * 4 {
            return Err(Error::ShapeMismatch {
                name,
                shape: entry.shape,
                expected: numel * 4,
                actual: bytes.len(),
            });
        }
        let data: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { name, index });
        }
        bundle.insert(
            &name,
            Tensor {
                shape: entry.shape,
                data,
            },
        )?;
    }
    Ok(bundle)
}

fn payload_path(dir: &Path, file: &str, manifest: &Path) -> Result<PathBuf> {
    let rel = Path::new(file);
    let plain = rel.components().count() == 1
        && matches!(
            rel.components().next(),
            Some(std::path::Component::Normal(_))
        );
    if !plain {
        return Err(Error::Manifest {
            path: manifest.to_owned(),
            message: format!("payload file `{file}` must be a bare file name"),
        });
    }
    Ok(dir.join(rel))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(name: &str, t: impl Into<Tensor>) -> Bundle {
        let mut b = Bundle::new();
        b.insert(name, t).unwrap();
        b
    }

    #[test]
    fn half_is_encoded_little_endian() {
        let dir = tempfile::tempdir().unwrap();
        let map = FeatureMap::new(1, 1, 1, vec![0.5]).unwrap();
        write_bundle(dir.path(), &single("features", map)).unwrap();
        let bytes = fs::read(dir.path().join("features.bin")).unwrap();
        assert_eq!(bytes, [0x00, 0x00, 0x00, 0x3F]);
    }

    #[test]
    fn payload_is_raster_order() {
        let dir = tempfile::tempdir().unwrap();
        let map = FeatureMap::new(2, 2, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        write_bundle(dir.path(), &single("f", map)).unwrap();
        let bytes = fs::read(dir.path().join("f.bin")).unwrap();
        let expected: Vec<u8> = [1.0f32, 2.0, 3.0, 4.0]
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        assert_eq!(bytes, expected);
    }

    #[test]
    fn manifest_layout() {
        let dir = tempfile::tempdir().unwrap();
        let map = FeatureMap::new(2, 3, 4, vec![0.0; 24]).unwrap();
        write_bundle(dir.path(), &single("features", map)).unwrap();
        let text = fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["version"], 1);
        assert_eq!(v["tensors"]["features"]["dtype"], "f32");
        assert_eq!(
            v["tensors"]["features"]["shape"],
            serde_json::json!([2, 3, 4])
        );
        assert_eq!(v["tensors"]["features"]["file"], "features.bin");
    }

    #[test]
    fn short_payload_is_shape_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let t = Tensor::new(vec![2, 2], vec![0.0; 4]).unwrap();
        write_bundle(dir.path(), &single("m", t)).unwrap();
        fs::write(dir.path().join("m.bin"), [0u8; 12]).unwrap();
        match read_bundle(dir.path()) {
            Err(Error::ShapeMismatch {
                expected, actual, ..
            }) => assert_eq!((expected, actual), (16, 12)),
            other => panic!("expected shape mismatch, got {other:?}"),
        }
    }

    #[test]
    fn mask_above_one_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let t = Tensor::new(vec![1, 1, 2], vec![0.2, 1.5]).unwrap();
        write_bundle(dir.path(), &single("masks", t)).unwrap();
        let bundle = read_bundle(dir.path()).unwrap();
        assert!(matches!(
            bundle.mask_stack("masks"),
            Err(Error::MaskRange { index: 1, .. })
        ));
    }

    #[test]
    fn mask_within_slack_is_clamped() {
        let mut b = Bundle::new();
        b.insert(
            "masks",
            Tensor::new(vec![1, 1, 2], vec![-5e-7, 1.0 + 5e-7]).unwrap(),
        )
        .unwrap();
        let m = b.mask_stack("masks").unwrap();
        assert_eq!(m.data(), &[0.0, 1.0]);
    }

    #[test]
    fn non_finite_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let t = Tensor::new(vec![1, 1, 2], vec![0.0, 1.0]).unwrap();
        write_bundle(dir.path(), &single("features", t)).unwrap();
        let mut bytes = 0.0f32.to_le_bytes().to_vec();
        bytes.extend(f32::NAN.to_le_bytes());
        fs::write(dir.path().join("features.bin"), bytes).unwrap();
        assert!(matches!(
            read_bundle(dir.path()),
            Err(Error::NonFinite { index: 1, .. })
        ));
    }

    #[test]
    fn missing_payload() {
        let dir = tempfile::tempdir().unwrap();
        let t = Tensor::new(vec![1], vec![0.0]).unwrap();
        write_bundle(dir.path(), &single("x", t)).unwrap();
        fs::remove_file(dir.path().join("x.bin")).unwrap();
        let err = read_bundle(dir.path()).unwrap_err();
        assert!(matches!(err, Error::MissingPayload { .. }));
        assert!(err.is_io());
    }

    #[test]
    fn names_are_checked() {
        let mut b = Bundle::new();
        let t = Tensor::new(vec![1], vec![0.0]).unwrap();
        assert!(matches!(
            b.insert("a-b", t.clone()),
            Err(Error::InvalidName(_))
        ));
        assert!(matches!(
            b.insert("", t.clone()),
            Err(Error::InvalidName(_))
        ));
        b.insert("a_b9", t.clone()).unwrap();
        assert!(matches!(b.insert("a_b9", t), Err(Error::DuplicateName(_))));
    }

    #[test]
    fn payload_path_cannot_escape() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join(MANIFEST_FILE),
            r#"{"version":1,"tensors":{"x":{"dtype":"f32","shape":[1],"file":"../x.bin"}}}"#,
        )
        .unwrap();
        assert!(matches!(
            read_bundle(dir.path()),
            Err(Error::Manifest { .. })
        ));
    }

    #[test]
    fn feature_map_rejects_nan() {
        assert!(matches!(
            FeatureMap::new(1, 1, 2, vec![0.0, f32::INFINITY]),
            Err(Error::NonFinite { index: 1, .. })
        ));
    }
}
