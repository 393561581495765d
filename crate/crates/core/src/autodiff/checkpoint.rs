//! Parameter checkpoint container.
//!
//! Layout (all integers little-endian):
//! `b"FZMCKPT\0"`, `u32` version, `u32` entry count, then per entry
//! `u32` name length, UTF-8 name, `u8` dtype code, `u32` rows, `u32` cols,
//! and `rows * cols` raw values.

use std::io::{Read, Write};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::params::ParamSet;
use super::tensor::{DType, Real, Tensor};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"FZMCKPT\0";
pub const VERSION: u32 = 1;

pub fn write_checkpoint<T: Real, W: Write>(params: &ParamSet<T>, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LE>(VERSION)?;
    w.write_u32::<LE>(params.len() as u32)?;
    for (name, t) in params.iter() {
        w.write_u32::<LE>(name.len() as u32)?;
        w.write_all(name.as_bytes())?;
        w.write_u8(T::DTYPE.code())?;
        w.write_u32::<LE>(t.rows() as u32)?;
        w.write_u32::<LE>(t.cols() as u32)?;
        for v in t.to_f64_vec() {
            match T::DTYPE {
                DType::F64 => w.write_f64::<LE>(v)?,
                DType::F32 => w.write_f32::<LE>(v as f32)?,
            }
        }
    }
    Ok(())
}

/// Reads a checkpoint, converting stored values to `T`.
pub fn read_checkpoint<T: Real, R: Read>(mut r: R) -> Result<ParamSet<T>> {
    let data_err = |msg: String| Error::Data(format!("checkpoint: {msg}"));
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(data_err("bad magic".into()));
    }
    let version = r.read_u32::<LE>()?;
    if version != VERSION {
        return Err(data_err(format!("unsupported version {version}")));
    }
    let count = r.read_u32::<LE>()?;
    let mut params = ParamSet::new();
    for _ in 0..count {
        let len = r.read_u32::<LE>()? as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| data_err("non UTF-8 name".into()))?;
        let code = r.read_u8()?;
        let dtype =
            DType::from_code(code).ok_or_else(|| data_err(format!("unknown dtype {code}")))?;
        let rows = r.read_u32::<LE>()? as usize;
        let cols = r.read_u32::<LE>()? as usize;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            let v = match dtype {
                DType::F64 => r.read_f64::<LE>()?,
                DType::F32 => r.read_f32::<LE>()? as f64,
            };
            data.push(T::of(v));
        }
        params.insert(name, Tensor::new(rows, cols, data)?)?;
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ParamSet<f64> {
        let mut p = ParamSet::new();
        p.insert(
            "w",
            Tensor::from_f64(2, 3, &[0.1, -2.5, 3.0, 1e-300, 7.0, -0.0]).unwrap(),
        )
        .unwrap();
        p.insert("b", Tensor::scalar(std::f64::consts::PI)).unwrap();
        p
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut buf = Vec::new();
        write_checkpoint(&sample(), &mut buf).unwrap();
        let back: ParamSet<f64> = read_checkpoint(buf.as_slice()).unwrap();
        let bits = |p: &ParamSet<f64>| p.flatten().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&sample()));
        assert_eq!(back.names().collect::<Vec<_>>(), ["w", "b"]);
    }

    #[test]
    fn f32_checkpoint_loads_as_f64() {
        let mut buf = Vec::new();
        write_checkpoint(&sample().cast::<f32>(), &mut buf).unwrap();
        let back: ParamSet<f64> = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back.get("b").unwrap().item(), std::f32::consts::PI as f64);
    }

    #[test]
    fn corrupt_input_is_a_data_error() {
        let mut buf = Vec::new();
        write_checkpoint(&sample(), &mut buf).unwrap();
        buf[0] = b'X';
        assert!(matches!(
            read_checkpoint::<f64, _>(buf.as_slice()),
            Err(Error::Data(_))
        ));
        assert!(read_checkpoint::<f64, _>(&buf[..10]).is_err());
    }
}
