//! Binary checkpoints: learned tensors plus optional optimizer state.
//!
//! Layout (little endian): magic `SCPK`, `u32` version, `u8` history kind,
//! four `u32` dims, then a tensor block. A tensor block is a `u32` count
//! followed by, per tensor, a `u16`-length name, `u32` rows, `u32` cols and
//! `f64` values. An optimizer section (`u8` flag, `u64` step, four `f64`
//! hyperparameters, first and second moment blocks) closes the file.

use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::adam::Adam;
use super::params::{Dims, HistoryKind, Params};
use super::tensor::Matrix;
use crate::Scalar;

const MAGIC: &[u8; 4] = b"SCPK";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint file")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error("{0}")]
    Io(#[from] io::Error),
}

fn put_u32(out: &mut Vec<u8>, x: u32) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn put_block<F: Scalar>(out: &mut Vec<u8>, params: &Params<F>) {
    let tensors = params.tensors();
    put_u32(out, tensors.len() as u32);
    for (name, m) in tensors {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        put_u32(out, m.rows() as u32);
        put_u32(out, m.cols() as u32);
        for x in m.data() {
            out.extend_from_slice(&x.as_f64().to_le_bytes());
        }
    }
}

struct Reader<'a>(&'a [u8]);

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], CheckpointError> {
        if self.0.len() < N {
            return Err(CheckpointError::Malformed("truncated".into()));
        }
        let (head, rest) = self.0.split_at(N);
        self.0 = rest;
        Ok(head.try_into().unwrap())
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take::<1>()?[0])
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    /// Reads a tensor block into `target`, whose structure must match.
    fn block<F: Scalar>(&mut self, target: &mut Params<F>) -> Result<(), CheckpointError> {
        let count = self.u32()? as usize;
        let expected = target.tensors().len();
        if count != expected {
            return Err(CheckpointError::Malformed(format!("{count} tensors, expected {expected}")));
        }
        for _ in 0..count {
            let len = u16::from_le_bytes(self.take()?) as usize;
            let mut name = vec![0u8; len];
            for b in name.iter_mut() {
                *b = self.u8()?;
            }
            let name = String::from_utf8(name).map_err(|_| CheckpointError::Malformed("tensor name".into()))?;
            let (rows, cols) = (self.u32()? as usize, self.u32()? as usize);
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                data.push(F::of(self.f64()?));
            }
            let slot = target
                .tensor_mut(&name)
                .ok_or_else(|| CheckpointError::Malformed(format!("unknown tensor {name}")))?;
            if slot.shape() != (rows, cols) {
                return Err(CheckpointError::Malformed(format!(
                    "{name}: shape {rows}x{cols}, expected {}x{}",
                    slot.rows(),
                    slot.cols()
                )));
            }
            *slot = Matrix::from_vec(rows, cols, data);
        }
        Ok(())
    }
}

pub fn to_bytes<F: Scalar>(params: &Params<F>, adam: Option<&Adam<F>>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    out.push(match params.kind {
        HistoryKind::Tokens => 0,
        HistoryKind::Stack => 1,
    });
    let d = params.dims;
    for x in [d.word, d.hidden, d.token, d.query] {
        put_u32(&mut out, x as u32);
    }
    put_u32(&mut out, params.vocab_size() as u32);
    put_block(&mut out, params);
    match adam {
        None => out.push(0),
        Some(a) => {
            out.push(1);
            out.extend_from_slice(&a.step.to_le_bytes());
            for x in [a.lr, a.beta1, a.beta2, a.eps] {
                out.extend_from_slice(&x.as_f64().to_le_bytes());
            }
            put_block(&mut out, &a.m);
            put_block(&mut out, &a.v);
        }
    }
    out
}

pub fn from_bytes<F: Scalar>(bytes: &[u8]) -> Result<(Params<F>, Option<Adam<F>>), CheckpointError> {
    let mut r = Reader(bytes);
    if &r.take::<4>()? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let kind = match r.u8()? {
        0 => HistoryKind::Tokens,
        1 => HistoryKind::Stack,
        k => return Err(CheckpointError::Malformed(format!("history kind {k}"))),
    };
    let dims = Dims {
        word: r.u32()? as usize,
        hidden: r.u32()? as usize,
        token: r.u32()? as usize,
        query: r.u32()? as usize,
    };
    let vocab = r.u32()? as usize;
    let mut params = Params::init(0, dims, vocab, kind);
    r.block(&mut params)?;
    let adam = match r.u8()? {
        0 => None,
        1 => {
            let step = u64::from_le_bytes(r.take()?);
            let mut a = Adam::new(&params, F::of(r.f64()?));
            a.beta1 = F::of(r.f64()?);
            a.beta2 = F::of(r.f64()?);
            a.eps = F::of(r.f64()?);
            a.step = step;
            r.block(&mut a.m)?;
            r.block(&mut a.v)?;
            Some(a)
        }
        f => return Err(CheckpointError::Malformed(format!("optimizer flag {f}"))),
    };
    if !r.0.is_empty() {
        return Err(CheckpointError::Malformed("trailing bytes".into()));
    }
    Ok((params, adam))
}

pub fn save<F: Scalar>(path: &Path, params: &Params<F>, adam: Option<&Adam<F>>) -> Result<(), CheckpointError> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(&to_bytes(params, adam))?;
    Ok(())
}

pub fn load<F: Scalar>(path: &Path) -> Result<(Params<F>, Option<Adam<F>>), CheckpointError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    from_bytes(&bytes)
}
