use std::fs;
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian, WriteBytesExt};
use evimpact_core::events::FrameStack;
use evimpact_core::ChannelStack;

use crate::error::{io_err, FormatError, Result};

const EVF_MAGIC: &[u8; 4] = b"EVF1";
const PRM_MAGIC: &[u8; 4] = b"PRM1";

fn encode(magic: &[u8; 4], header: [u32; 4], values: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 4 * values.len());
    out.extend_from_slice(magic);
    for h in header {
        out.write_u32::<LittleEndian>(h).expect("vec write");
    }
    for &v in values {
        out.write_f32::<LittleEndian>(v).expect("vec write");
    }
    out
}

fn decode(magic: &[u8; 4], bytes: &[u8]) -> Result<([u32; 4], Vec<f32>)> {
    if bytes.len() < 20 {
        if bytes.len() >= 4 && &bytes[..4] != magic {
            return Err(bad_magic(magic, &bytes[..4]));
        }
        return Err(FormatError::Truncated {
            expected: 20,
            found: bytes.len(),
        });
    }
    if &bytes[..4] != magic {
        return Err(bad_magic(magic, &bytes[..4]));
    }
    let mut header = [0u32; 4];
    LittleEndian::read_u32_into(&bytes[4..20], &mut header);
    let count = header
        .iter()
        .take(if magic == EVF_MAGIC { 3 } else { 4 })
        .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
        .ok_or(FormatError::Overflow)?;
    let expected = count
        .checked_mul(4)
        .and_then(|n| n.checked_add(20))
        .ok_or(FormatError::Overflow)?;
    if bytes.len() < expected {
        return Err(FormatError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(FormatError::TrailingBytes {
            extra: bytes.len() - expected,
        });
    }
    let mut values = vec![0f32; count];
    LittleEndian::read_f32_into(&bytes[20..], &mut values);
    Ok((header, values))
}

fn bad_magic(expected: &[u8; 4], found: &[u8]) -> FormatError {
    FormatError::BadMagic {
        expected: String::from_utf8_lossy(expected).into_owned(),
        found: String::from_utf8_lossy(found).into_owned(),
    }
}

pub fn encode_evf(stack: &FrameStack) -> Vec<u8> {
    let header = [stack.frames(), stack.height(), stack.width()].map(|d| d as u32);
    encode(EVF_MAGIC, [header[0], header[1], header[2], stack.dt_us()], stack.values())
}

pub fn decode_evf(bytes: &[u8]) -> Result<FrameStack> {
    let ([k, h, w, dt], values) = decode(EVF_MAGIC, bytes)?;
    Ok(FrameStack::new(k as usize, h as usize, w as usize, dt, values)?)
}

pub fn encode_prm(stack: &ChannelStack) -> Vec<u8> {
    let header = [stack.frames(), stack.channels(), stack.height(), stack.width()].map(|d| d as u32);
    encode(PRM_MAGIC, header, stack.values())
}

pub fn decode_prm(bytes: &[u8]) -> Result<ChannelStack> {
    let ([k, c, h, w], values) = decode(PRM_MAGIC, bytes)?;
    Ok(ChannelStack::from_vec(k as usize, c as usize, h as usize, w as usize, values)?)
}

pub fn write_evf(stack: &FrameStack, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_evf(stack)).map_err(io_err(path))
}

pub fn read_evf(path: impl AsRef<Path>) -> Result<FrameStack> {
    let path = path.as_ref();
    decode_evf(&fs::read(path).map_err(io_err(path))?)
}

pub fn write_prm(stack: &ChannelStack, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_prm(stack)).map_err(io_err(path))
}

pub fn read_prm(path: impl AsRef<Path>) -> Result<ChannelStack> {
    let path = path.as_ref();
    decode_prm(&fs::read(path).map_err(io_err(path))?)
}
