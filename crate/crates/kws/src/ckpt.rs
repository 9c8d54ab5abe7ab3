//! Checkpoint container.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! magic        8 bytes  "KWSCKPT\0"
//! version      u32      1
//! model id     u16 length + UTF-8
//! epoch        u32
//! val acc      f64
//! seed         u64
//! slices       u32 count, then per slice in network order:
//!              u16 name length + UTF-8 name, u32 value count, f64 values
//! batch norms  u32 count, then per layer in network order:
//!              u16 name length + UTF-8 name, u32 channels,
//!              f64 running means, f64 running variances
//! digest       32 bytes SHA-256 of everything above
//! ```
//!
//! Spatial-dropout rates are not stored; they do not affect evaluation.

use std::path::Path;

use kws_core::models::{Checkpoint, ModelId, Parameters, TrainingMetadata};
use kws_core::nn::RunningStats;
use sha2::{Digest, Sha256};

use crate::error::{KwsError, Result};
use crate::fsutil::atomic_write;

pub const MAGIC: &[u8; 8] = b"KWSCKPT\0";
pub const VERSION: u32 = 1;

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend((s.len() as u16).to_le_bytes());
    out.extend(s.as_bytes());
}

fn put_f64s(out: &mut Vec<u8>, v: &[f64]) {
    for x in v {
        out.extend(x.to_le_bytes());
    }
}

pub fn encode_checkpoint(ck: &Checkpoint) -> Result<Vec<u8>> {
    let net = ck.network()?;
    let mut out = Vec::with_capacity(64 + 8 * ck.params.values.len());
    out.extend(MAGIC);
    out.extend(VERSION.to_le_bytes());
    put_str(&mut out, ck.model_id());
    out.extend(ck.metadata.epoch.to_le_bytes());
    out.extend(ck.metadata.validation_accuracy.to_le_bytes());
    out.extend(ck.metadata.seed.to_le_bytes());
    out.extend((net.slices().len() as u32).to_le_bytes());
    for s in net.slices() {
        put_str(&mut out, &s.name);
        out.extend((s.len as u32).to_le_bytes());
        put_f64s(&mut out, &ck.params.values[s.offset..s.offset + s.len]);
    }
    let names = ck.bn_names()?;
    out.extend((names.len() as u32).to_le_bytes());
    for (name, stats) in names.iter().zip(&ck.params.bn) {
        put_str(&mut out, name);
        out.extend((stats.channels() as u32).to_le_bytes());
        put_f64s(&mut out, &stats.mean);
        put_f64s(&mut out, &stats.var);
    }
    let digest = Sha256::digest(&out);
    out.extend(digest);
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or("truncated checkpoint")?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> std::result::Result<u16, String> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> std::result::Result<f64, String> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn f64s(&mut self, n: usize) -> std::result::Result<Vec<f64>, String> {
        (0..n).map(|_| self.f64()).collect()
    }

    fn str(&mut self) -> std::result::Result<String, String> {
        let n = self.u16()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| "name is not UTF-8".to_string())
    }
}

pub fn decode_checkpoint(bytes: &[u8], path: &Path) -> Result<Checkpoint> {
    let bad = |msg: String| KwsError::format(path, msg);
    if bytes.len() < MAGIC.len() + 32 || &bytes[..8] != MAGIC {
        return Err(bad("not a checkpoint file".into()));
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(bad("checksum mismatch".into()));
    }
    let mut r = Reader { buf: body, pos: 8 };
    let version = r.u32().map_err(bad)?;
    if version != VERSION {
        return Err(bad(format!("unsupported checkpoint version {version}")));
    }
    let id = r.str().map_err(bad)?;
    let model: ModelId = id.parse()?;
    let net = kws_core::models::Network::new(&model.spec())?;
    let metadata = TrainingMetadata {
        epoch: r.u32().map_err(bad)?,
        validation_accuracy: r.f64().map_err(bad)?,
        seed: r.u64().map_err(bad)?,
    };
    let count = r.u32().map_err(bad)? as usize;
    if count != net.slices().len() {
        return Err(bad(format!("{count} parameter slices, model {id} has {}", net.slices().len())));
    }
    let mut values = vec![0.0; net.num_params()];
    for s in net.slices() {
        let name = r.str().map_err(bad)?;
        let len = r.u32().map_err(bad)? as usize;
        if name != s.name || len != s.len {
            return Err(bad(format!("slice {name} ({len}) where {} ({}) was expected", s.name, s.len)));
        }
        values[s.offset..s.offset + s.len].copy_from_slice(&r.f64s(len).map_err(bad)?);
    }
    let count = r.u32().map_err(bad)? as usize;
    if count != net.bn_channels().len() {
        return Err(bad(format!("{count} batch-norm layers, model {id} has {}", net.bn_channels().len())));
    }
    let mut bn = Vec::with_capacity(count);
    for &channels in net.bn_channels() {
        let _name = r.str().map_err(bad)?;
        let c = r.u32().map_err(bad)? as usize;
        if c != channels {
            return Err(bad(format!("batch-norm layer with {c} channels where {channels} were expected")));
        }
        let mean = r.f64s(c).map_err(bad)?;
        let var = r.f64s(c).map_err(bad)?;
        bn.push(RunningStats { mean, var });
    }
    if r.pos != body.len() {
        return Err(bad("trailing bytes after batch-norm statistics".into()));
    }
    Ok(Checkpoint::new(model.spec(), Parameters { values, bn }, metadata)?)
}

pub fn write_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    atomic_write(path, &encode_checkpoint(ck)?)
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| KwsError::io(path, e))?;
    decode_checkpoint(&bytes, path)
}
