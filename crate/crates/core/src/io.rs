//! `SRBD` binary arrays.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! offset  size      content
//! 0       4         magic "SRBD"
//! 4       4         format version (u32, currently 1)
//! 8       4         element type (u32): 1 = f64, 2 = f32
//! 12      4         rank (u32)
//! 16      8*rank    dimensions (u64 each)
//! ...     n*size    payload, row-major, little-endian IEEE 754
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{ArrayD, ArrayView, Dimension, IxDyn};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"SRBD";
pub const FORMAT_VERSION: u32 = 1;

pub trait Element: Copy + 'static {
    const CODE: u32;
    const SIZE: usize;
    fn put(self, out: &mut Vec<u8>);
    fn get(bytes: &[u8]) -> Self;
}

impl Element for f64 {
    const CODE: u32 = 1;
    const SIZE: usize = 8;
    fn put(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn get(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8 bytes"))
    }
}

impl Element for f32 {
    const CODE: u32 = 2;
    const SIZE: usize = 4;
    fn put(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn get(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("4 bytes"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArrayData {
    F64(ArrayD<f64>),
    F32(ArrayD<f32>),
}

impl ArrayData {
    pub fn shape(&self) -> &[usize] {
        match self {
            ArrayData::F64(a) => a.shape(),
            ArrayData::F32(a) => a.shape(),
        }
    }

    /// Widens f32 payloads; f64 payloads are returned unchanged.
    pub fn into_f64(self) -> ArrayD<f64> {
        match self {
            ArrayData::F64(a) => a,
            ArrayData::F32(a) => a.mapv(f64::from),
        }
    }
}

pub fn write_array<T, D, W>(mut writer: W, array: ArrayView<T, D>) -> Result<()>
where
    T: Element,
    D: Dimension,
    W: Write,
{
    let mut header = Vec::with_capacity(16 + 8 * array.ndim());
    header.extend_from_slice(&MAGIC);
    header.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    header.extend_from_slice(&T::CODE.to_le_bytes());
    header.extend_from_slice(&(array.ndim() as u32).to_le_bytes());
    for &d in array.shape() {
        header.extend_from_slice(&(d as u64).to_le_bytes());
    }
    writer.write_all(&header)?;

    // Logical (row-major) iteration order regardless of memory layout.
    let mut chunk = Vec::with_capacity(T::SIZE * 8192);
    for &v in array.iter() {
        v.put(&mut chunk);
        if chunk.len() >= T::SIZE * 8192 {
            writer.write_all(&chunk)?;
            chunk.clear();
        }
    }
    writer.write_all(&chunk)?;
    writer.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_payload<T: Element, R: Read>(r: &mut R, shape: Vec<usize>) -> Result<ArrayD<T>> {
    let n: usize = shape.iter().product();
    let mut bytes = vec![0u8; n * T::SIZE];
    r.read_exact(&mut bytes)
        .map_err(|e| Error::Format(format!("truncated payload: {e}")))?;
    let data: Vec<T> = bytes.chunks_exact(T::SIZE).map(T::get).collect();
    ArrayD::from_shape_vec(IxDyn(&shape), data).map_err(|e| Error::Format(e.to_string()))
}

pub fn read_array<R: Read>(mut reader: R) -> Result<ArrayData> {
    let mut magic = [0u8; 4];
    reader.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = read_u32(&mut reader)?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let code = read_u32(&mut reader)?;
    let rank = read_u32(&mut reader)? as usize;
    let mut shape = Vec::with_capacity(rank);
    for _ in 0..rank {
        let mut b = [0u8; 8];
        reader.read_exact(&mut b)?;
        shape.push(u64::from_le_bytes(b) as usize);
    }
    match code {
        1 => Ok(ArrayData::F64(read_payload(&mut reader, shape)?)),
        2 => Ok(ArrayData::F32(read_payload(&mut reader, shape)?)),
        other => Err(Error::Format(format!("unknown element type {other}"))),
    }
}

pub fn save_array<T, D>(path: impl AsRef<Path>, array: ArrayView<T, D>) -> Result<()>
where
    T: Element,
    D: Dimension,
{
    write_array(BufWriter::new(File::create(path)?), array)
}

pub fn load_array(path: impl AsRef<Path>) -> Result<ArrayData> {
    read_array(BufReader::new(File::open(path)?))
}
