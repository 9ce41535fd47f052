//! Binary tensor files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "RELITNSR"            8-byte magic
//! u32                   header length in bytes
//! header                UTF-8 JSON {"dtype","layout","height","width","classes"}
//! payload               raw f32 or u16 values, row-major
//! ```
//!
//! Logits are `f32`/`HWC`, label maps `u16`/`HW`, auxiliary image channels
//! `f32`/`HWC` and feature vectors `f32`/`HW` with `height = 1`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{ImageFeature, ImageTensor, LabelMap, LogitTensor};

pub const MAGIC: &[u8; 8] = b"RELITNSR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    U16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layout {
    #[serde(rename = "HWC")]
    Hwc,
    #[serde(rename = "HW")]
    Hw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorHeader {
    pub dtype: Dtype,
    pub layout: Layout,
    pub height: usize,
    pub width: usize,
    pub classes: usize,
}

impl TensorHeader {
    pub fn element_count(&self) -> usize {
        match self.layout {
            Layout::Hwc => self.height * self.width * self.classes,
            Layout::Hw => self.height * self.width,
        }
    }

    fn element_size(&self) -> usize {
        match self.dtype {
            Dtype::F32 => 4,
            Dtype::U16 => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    F32(Vec<f32>),
    U16(Vec<u16>),
}

/// A decoded file before it is interpreted as a specific tensor kind.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTensor {
    pub header: TensorHeader,
    pub payload: Payload,
}

impl RawTensor {
    pub fn into_logits(self) -> Result<LogitTensor> {
        let h = self.expect(Dtype::F32, Layout::Hwc, "logits")?;
        match self.payload {
            Payload::F32(data) => LogitTensor::new(h.height, h.width, h.classes, data),
            Payload::U16(_) => unreachable!(),
        }
    }

    /// Label map plus the class count recorded in its header.
    pub fn into_labels(self) -> Result<(LabelMap, usize)> {
        let h = self.expect(Dtype::U16, Layout::Hw, "labels")?;
        match self.payload {
            Payload::U16(data) => Ok((LabelMap::new(h.height, h.width, data)?, h.classes)),
            Payload::F32(_) => unreachable!(),
        }
    }

    pub fn into_image(self) -> Result<ImageTensor> {
        let h = self.expect(Dtype::F32, Layout::Hwc, "image")?;
        match self.payload {
            Payload::F32(data) => ImageTensor::new(h.height, h.width, h.classes, data),
            Payload::U16(_) => unreachable!(),
        }
    }

    pub fn into_feature(self, image_id: &str) -> Result<ImageFeature> {
        let h = self.expect(Dtype::F32, Layout::Hw, "feature")?;
        if h.height != 1 {
            return Err(Error::Format(format!(
                "feature file must have height 1, got {}",
                h.height
            )));
        }
        match self.payload {
            Payload::F32(data) => ImageFeature::new(image_id, data),
            Payload::U16(_) => unreachable!(),
        }
    }

    fn expect(&self, dtype: Dtype, layout: Layout, what: &str) -> Result<TensorHeader> {
        if self.header.dtype != dtype || self.header.layout != layout {
            return Err(Error::Format(format!(
                "{what} must be {dtype:?}/{layout:?}, file is {:?}/{:?}",
                self.header.dtype, self.header.layout
            )));
        }
        Ok(self.header)
    }
}

pub fn encode(header: &TensorHeader, payload: &Payload) -> Result<Vec<u8>> {
    let expected_dtype = match payload {
        Payload::F32(_) => Dtype::F32,
        Payload::U16(_) => Dtype::U16,
    };
    let len = match payload {
        Payload::F32(v) => v.len(),
        Payload::U16(v) => v.len(),
    };
    if header.dtype != expected_dtype || len != header.element_count() {
        return Err(Error::Format(format!(
            "header {header:?} does not describe a payload of {len} {expected_dtype:?} values"
        )));
    }
    let json = serde_json::to_vec(header)?;
    let mut out = Vec::with_capacity(12 + json.len() + len * header.element_size());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    match payload {
        Payload::F32(v) => v
            .iter()
            .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        Payload::U16(v) => v
            .iter()
            .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
    }
    Ok(out)
}

fn split_header(bytes: &[u8]) -> Result<(TensorHeader, &[u8])> {
    if bytes.len() < 12 {
        return Err(Error::Format("file shorter than the fixed preamble".into()));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let rest = &bytes[12..];
    if rest.len() < header_len {
        return Err(Error::Format("truncated header".into()));
    }
    let header: TensorHeader = serde_json::from_slice(&rest[..header_len])
        .map_err(|e| Error::Format(format!("bad header: {e}")))?;
    if header.classes == 0 {
        return Err(Error::Format("header declares zero classes".into()));
    }
    Ok((header, &rest[header_len..]))
}

pub fn decode(bytes: &[u8]) -> Result<RawTensor> {
    let (header, body) = split_header(bytes)?;
    let expected = header
        .element_count()
        .checked_mul(header.element_size())
        .ok_or_else(|| Error::Format("header dimensions overflow".into()))?;
    if body.len() != expected {
        return Err(Error::Format(format!(
            "payload is {} bytes, header implies {expected}",
            body.len()
        )));
    }
    let payload = match header.dtype {
        Dtype::F32 => Payload::F32(
            body.chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
        Dtype::U16 => Payload::U16(
            body.chunks_exact(2)
                .map(|c| u16::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
    };
    Ok(RawTensor { header, payload })
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<RawTensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Reads the header of a tensor file and checks the file size against it
/// without decoding the payload.
pub fn read_header(path: impl AsRef<Path>) -> Result<TensorHeader> {
    use std::io::Read;

    let path = path.as_ref();
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut preamble = [0u8; 12];
    file.read_exact(&mut preamble).map_err(|_| {
        Error::Format(format!(
            "{}: file shorter than the fixed preamble",
            path.display()
        ))
    })?;
    let header_len = u32::from_le_bytes(preamble[8..12].try_into().unwrap()) as usize;
    let mut bytes = preamble.to_vec();
    bytes.resize(12 + header_len, 0);
    file.read_exact(&mut bytes[12..])
        .map_err(|_| Error::Format(format!("{}: truncated header", path.display())))?;
    let header = split_header(&bytes)
        .map(|(h, _)| h)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let file_len = file.metadata().map_err(|e| Error::io(path, e))?.len() as usize;
    let expected = bytes.len() + header.element_count() * header.element_size();
    if file_len != expected {
        return Err(Error::Format(format!(
            "{}: file is {file_len} bytes, header implies {expected}",
            path.display()
        )));
    }
    Ok(header)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_tensor(
    path: impl AsRef<Path>,
    header: &TensorHeader,
    payload: &Payload,
) -> Result<()> {
    write_bytes(path.as_ref(), &encode(header, payload)?)
}

pub fn logits_header(t: &LogitTensor) -> TensorHeader {
    TensorHeader {
        dtype: Dtype::F32,
        layout: Layout::Hwc,
        height: t.height(),
        width: t.width(),
        classes: t.classes(),
    }
}

pub fn write_logits(path: impl AsRef<Path>, t: &LogitTensor) -> Result<()> {
    write_tensor(path, &logits_header(t), &Payload::F32(t.data().to_vec()))
}

pub fn write_labels(path: impl AsRef<Path>, labels: &LabelMap, classes: usize) -> Result<()> {
    let header = TensorHeader {
        dtype: Dtype::U16,
        layout: Layout::Hw,
        height: labels.height(),
        width: labels.width(),
        classes,
    };
    write_tensor(path, &header, &Payload::U16(labels.data().to_vec()))
}

pub fn write_image(path: impl AsRef<Path>, image: &ImageTensor) -> Result<()> {
    let header = TensorHeader {
        dtype: Dtype::F32,
        layout: Layout::Hwc,
        height: image.height(),
        width: image.width(),
        classes: image.channels(),
    };
    write_tensor(path, &header, &Payload::F32(image.data().to_vec()))
}

pub fn write_feature(path: impl AsRef<Path>, feature: &ImageFeature) -> Result<()> {
    let header = TensorHeader {
        dtype: Dtype::F32,
        layout: Layout::Hw,
        height: 1,
        width: feature.dim(),
        classes: 1,
    };
    write_tensor(path, &header, &Payload::F32(feature.vector.clone()))
}

pub fn read_logits(path: impl AsRef<Path>) -> Result<LogitTensor> {
    read_tensor(path)?.into_logits()
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<(LabelMap, usize)> {
    read_tensor(path)?.into_labels()
}

pub fn read_image(path: impl AsRef<Path>) -> Result<ImageTensor> {
    read_tensor(path)?.into_image()
}

pub fn read_feature(path: impl AsRef<Path>, image_id: &str) -> Result<ImageFeature> {
    read_tensor(path)?.into_feature(image_id)
}
