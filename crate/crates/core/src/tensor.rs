//! Dense row-major tensor and its bit-exact wire format.
//!
//! The wire format ("HRTF") is the interchange contract with external
//! feature and mask producers:
//!
//! ```text
//! offset 0   4 magic bytes            0x48 0x52 0x54 0x46
//! offset 4   u8 version               1
//! offset 5   u8 dtype code            1 = f32 little-endian, 2 = u8
//! offset 6   u8 ndim                  1..=8
//! offset 7   ndim x u64 little-endian dims, each >= 1
//! then       payload, row-major (last dimension fastest), no padding
//! ```
//!
//! Total size is exactly `7 + 8*ndim + payload` bytes. Encoding followed by
//! decoding (and vice versa) is a bitwise identity.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"HRTF";
pub const VERSION: u8 = 1;
pub const MAX_DIMS: usize = 8;

const HEADER_FIXED: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    U8,
}

impl Dtype {
    pub fn code(self) -> u8 {
        match self {
            Dtype::F32 => 1,
            Dtype::U8 => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Dtype> {
        match code {
            1 => Some(Dtype::F32),
            2 => Some(Dtype::U8),
            _ => None,
        }
    }

    pub fn elem_size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::U8 => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    F32(Vec<f32>),
    U8(Vec<u8>),
}

/// Dense row-major array, the carrier for features, masks, and scores.
///
/// Immutable after construction; shared freely across readers.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Storage,
}

fn check_shape(shape: &[usize], len: usize) -> Result<()> {
    if shape.is_empty() || shape.len() > MAX_DIMS {
        return Err(Error::Shape(format!(
            "tensor must have 1..={} dims, got {}",
            MAX_DIMS,
            shape.len()
        )));
    }
    let mut product: usize = 1;
    for (axis, &dim) in shape.iter().enumerate() {
        if dim == 0 {
            return Err(Error::Shape(format!("dimension {axis} is zero")));
        }
        product = product
            .checked_mul(dim)
            .ok_or_else(|| Error::Shape("dimension product overflows usize".to_string()))?;
    }
    if product != len {
        return Err(Error::Shape(format!(
            "shape {shape:?} implies {product} elements, buffer holds {len}"
        )));
    }
    Ok(())
}

impl Tensor {
    pub fn from_f32(shape: &[usize], data: Vec<f32>) -> Result<Tensor> {
        check_shape(shape, data.len())?;
        Ok(Tensor {
            shape: shape.to_vec(),
            data: Storage::F32(data),
        })
    }

    pub fn from_u8(shape: &[usize], data: Vec<u8>) -> Result<Tensor> {
        check_shape(shape, data.len())?;
        Ok(Tensor {
            shape: shape.to_vec(),
            data: Storage::U8(data),
        })
    }

    pub fn zeros_f32(shape: &[usize]) -> Result<Tensor> {
        let len = shape.iter().product();
        Tensor::from_f32(shape, alloc::vec![0.0; len])
    }

    pub fn dtype(&self) -> Dtype {
        match self.data {
            Storage::F32(_) => Dtype::F32,
            Storage::U8(_) => Dtype::U8,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        match &self.data {
            Storage::F32(v) => v.len(),
            Storage::U8(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_f32(&self) -> Result<&[f32]> {
        match &self.data {
            Storage::F32(v) => Ok(v),
            Storage::U8(_) => Err(Error::Input("expected f32 tensor, got u8".to_string())),
        }
    }

    pub fn as_u8(&self) -> Result<&[u8]> {
        match &self.data {
            Storage::U8(v) => Ok(v),
            Storage::F32(_) => Err(Error::Input("expected u8 tensor, got f32".to_string())),
        }
    }

    /// True when every element is a finite float (vacuously true for u8).
    pub fn all_finite(&self) -> bool {
        match &self.data {
            Storage::F32(v) => v.iter().all(|x| x.is_finite()),
            Storage::U8(_) => true,
        }
    }

    /// Serialized byte size: `7 + 8*ndim + payload`.
    pub fn encoded_len(&self) -> usize {
        HEADER_FIXED + 8 * self.shape.len() + self.len() * self.dtype().elem_size()
    }

    /// Serialize to the wire format.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.dtype().code());
        out.push(self.shape.len() as u8);
        for &dim in &self.shape {
            out.extend_from_slice(&(dim as u64).to_le_bytes());
        }
        match &self.data {
            Storage::F32(v) => {
                for x in v {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
            Storage::U8(v) => out.extend_from_slice(v),
        }
        out
    }

    /// Parse the wire format; exact inverse of [`Tensor::encode`].
    pub fn decode(bytes: &[u8]) -> Result<Tensor> {
        let fail = |offset: usize, reason: &str| Error::Format {
            offset,
            reason: reason.to_string(),
        };
        if bytes.len() < 4 || bytes[..4] != MAGIC {
            return Err(fail(0, "bad magic, expected \"HRTF\""));
        }
        if bytes.len() < 5 {
            return Err(fail(4, "missing version byte"));
        }
        if bytes[4] != VERSION {
            return Err(fail(4, "unsupported version"));
        }
        if bytes.len() < 6 {
            return Err(fail(5, "missing dtype byte"));
        }
        let dtype =
            Dtype::from_code(bytes[5]).ok_or_else(|| fail(5, "unknown dtype code"))?;
        if bytes.len() < 7 {
            return Err(fail(6, "missing ndim byte"));
        }
        let ndim = bytes[6] as usize;
        if ndim == 0 || ndim > MAX_DIMS {
            return Err(fail(6, "ndim outside 1..=8"));
        }
        let dims_end = HEADER_FIXED + 8 * ndim;
        if bytes.len() < dims_end {
            return Err(fail(bytes.len(), "truncated dimension list"));
        }
        let mut shape = Vec::with_capacity(ndim);
        let mut count: u64 = 1;
        for axis in 0..ndim {
            let at = HEADER_FIXED + 8 * axis;
            let dim = u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
            if dim == 0 {
                return Err(fail(at, "zero dimension"));
            }
            count = count
                .checked_mul(dim)
                .ok_or_else(|| fail(at, "dimension product overflows u64"))?;
            let dim_usize =
                usize::try_from(dim).map_err(|_| fail(at, "dimension exceeds usize"))?;
            shape.push(dim_usize);
        }
        let count = usize::try_from(count)
            .map_err(|_| fail(HEADER_FIXED, "element count exceeds usize"))?;
        let payload_len = count
            .checked_mul(dtype.elem_size())
            .ok_or_else(|| fail(dims_end, "payload size overflows usize"))?;
        let available = bytes.len() - dims_end;
        if available < payload_len {
            return Err(fail(bytes.len(), "truncated payload"));
        }
        if available > payload_len {
            return Err(fail(
                dims_end + payload_len,
                "trailing bytes after payload",
            ));
        }
        let payload = &bytes[dims_end..];
        match dtype {
            Dtype::F32 => {
                let mut data = Vec::with_capacity(count);
                for chunk in payload.chunks_exact(4) {
                    data.push(f32::from_le_bytes(chunk.try_into().unwrap()));
                }
                Tensor::from_f32(&shape, data)
            }
            Dtype::U8 => Tensor::from_u8(&shape, payload.to_vec()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn f32_vector_encodes_to_23_bytes() {
        let t = Tensor::from_f32(&[2], vec![1.0, 2.0]).unwrap();
        let bytes = t.encode();
        assert_eq!(bytes.len(), 23);
        assert_eq!(t.encoded_len(), 23);
        assert_eq!(&bytes[..4], b"HRTF");
        assert_eq!(bytes[4], 1);
        assert_eq!(bytes[5], 1);
        assert_eq!(bytes[6], 1);
        assert_eq!(u64::from_le_bytes(bytes[7..15].try_into().unwrap()), 2);
    }

    #[test]
    fn smallest_mask_header() {
        let t = Tensor::from_u8(&[1, 1], vec![1]).unwrap();
        let bytes = t.encode();
        assert_eq!(bytes.len(), 7 + 16 + 1);
        assert_eq!(bytes[5], 2);
        assert_eq!(bytes[6], 2);
        assert_eq!(u64::from_le_bytes(bytes[7..15].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[15..23].try_into().unwrap()), 1);
        assert_eq!(bytes[23], 1);
    }

    #[test]
    fn seeded_round_trip_is_bit_identical() {
        let mut rng = SplitMix64::new(99);
        let mut data = vec![0.0f32; 3 * 4 * 5];
        rng.fill_normal_f32(&mut data, 1.0);
        let t = Tensor::from_f32(&[3, 4, 5], data).unwrap();
        let back = Tensor::decode(&t.encode()).unwrap();
        assert_eq!(t, back);
        let a = t.as_f32().unwrap();
        let b = back.as_f32().unwrap();
        for (x, y) in a.iter().zip(b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn non_finite_payload_round_trips() {
        let t = Tensor::from_f32(&[3], vec![f32::NAN, f32::INFINITY, -0.0]).unwrap();
        let back = Tensor::decode(&t.encode()).unwrap();
        let a = t.as_f32().unwrap();
        let b = back.as_f32().unwrap();
        for (x, y) in a.iter().zip(b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn bad_magic_fails_at_offset_zero() {
        let t = Tensor::from_f32(&[1], vec![0.5]).unwrap();
        let mut bytes = t.encode();
        bytes[..4].copy_from_slice(b"XXXX");
        match Tensor::decode(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_payload_rejected() {
        // dims [2,2] but only 3 floats of payload
        let t = Tensor::from_f32(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let mut bytes = t.encode();
        bytes.truncate(bytes.len() - 4);
        match Tensor::decode(&bytes) {
            Err(Error::Format { reason, .. }) => assert!(reason.contains("truncated")),
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn trailing_bytes_rejected() {
        let t = Tensor::from_u8(&[2], vec![0, 1]).unwrap();
        let mut bytes = t.encode();
        bytes.push(0);
        assert!(matches!(Tensor::decode(&bytes), Err(Error::Format { .. })));
    }

    #[test]
    fn unknown_dtype_and_version_rejected() {
        let t = Tensor::from_u8(&[1], vec![0]).unwrap();
        let mut bytes = t.encode();
        bytes[5] = 9;
        match Tensor::decode(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("{other:?}"),
        }
        let mut bytes = t.encode();
        bytes[4] = 2;
        match Tensor::decode(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dim_overflow_rejected() {
        let t = Tensor::from_u8(&[1, 1], vec![7]).unwrap();
        let mut bytes = t.encode();
        bytes[7..15].copy_from_slice(&u64::MAX.to_le_bytes());
        bytes[15..23].copy_from_slice(&4u64.to_le_bytes());
        match Tensor::decode(&bytes) {
            Err(Error::Format { reason, .. }) => assert!(reason.contains("overflow")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_dim_rejected() {
        assert!(Tensor::from_f32(&[0], vec![]).is_err());
        assert!(Tensor::from_f32(&[2, 0], vec![]).is_err());
        assert!(Tensor::from_f32(&[], vec![]).is_err());
        assert!(Tensor::from_f32(&[1; 9], vec![0.0]).is_err());
    }

    #[test]
    fn shape_product_must_match_len() {
        assert!(Tensor::from_f32(&[2, 2], vec![1.0, 2.0, 3.0]).is_err());
        assert!(Tensor::from_u8(&[3], vec![1, 2, 3, 4]).is_err());
    }
}
