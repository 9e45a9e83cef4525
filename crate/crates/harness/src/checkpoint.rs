//! Network checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic    8 bytes  "SSAQNET\0"
//! version  u32      1
//! dtype    u8 length + ASCII tag ("f32" or "f64")
//! layers   u32 count, then one u64 per layer size (input first)
//! params   u64 count, then the parameters as little-endian IEEE floats,
//!          layer by layer, weights (input-major) then biases
//! ```

use anyhow::{bail, ensure, Context, Result};
use ssa_core::ddqn::{QNetwork, Scalar};
use std::path::Path;

const MAGIC: &[u8; 8] = b"SSAQNET\0";
pub const VERSION: u32 = 1;

/// Floats with a fixed little-endian encoding.
pub trait LeFloat: Scalar {
    const WIDTH: usize;
    fn put(self, out: &mut Vec<u8>);
    fn get(bytes: &[u8]) -> Self;
}

impl LeFloat for f32 {
    const WIDTH: usize = 4;

    fn put(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn get(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("4 bytes"))
    }
}

impl LeFloat for f64 {
    const WIDTH: usize = 8;

    fn put(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn get(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8 bytes"))
    }
}

pub fn encode<T: LeFloat>(net: &QNetwork<T>) -> Vec<u8> {
    let sizes = net.sizes();
    let mut out = Vec::with_capacity(64 + net.parameter_count() * T::WIDTH);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(T::NAME.len() as u8);
    out.extend_from_slice(T::NAME.as_bytes());
    out.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
    for s in &sizes {
        out.extend_from_slice(&(*s as u64).to_le_bytes());
    }
    out.extend_from_slice(&(net.parameter_count() as u64).to_le_bytes());
    for &p in net.parameters() {
        p.put(&mut out);
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        ensure!(self.bytes.len() >= n, "checkpoint truncated");
        let (head, rest) = self.bytes.split_at(n);
        self.bytes = rest;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into()?))
    }
}

pub fn decode<T: LeFloat>(bytes: &[u8]) -> Result<QNetwork<T>> {
    let mut r = Reader { bytes };
    ensure!(r.take(MAGIC.len())? == MAGIC, "not a network checkpoint");
    let version = r.u32()?;
    ensure!(version == VERSION, "unsupported checkpoint version {version}");
    let tag_len = r.take(1)?[0] as usize;
    let tag = r.take(tag_len)?;
    if tag != T::NAME.as_bytes() {
        bail!(
            "checkpoint holds {} parameters, expected {}",
            String::from_utf8_lossy(tag),
            T::NAME
        );
    }
    let n_sizes = r.u32()? as usize;
    let sizes = (0..n_sizes)
        .map(|_| Ok(usize::try_from(r.u64()?)?))
        .collect::<Result<Vec<_>>>()?;
    let count = usize::try_from(r.u64()?)?;
    let raw = r.take(count.checked_mul(T::WIDTH).context("parameter count overflows")?)?;
    ensure!(r.bytes.is_empty(), "trailing bytes after checkpoint");
    let params: Vec<T> = raw.chunks_exact(T::WIDTH).map(T::get).collect();
    Ok(QNetwork::from_parameters(&sizes, &params)?)
}

pub fn save<T: LeFloat>(net: &QNetwork<T>, path: &Path) -> Result<()> {
    std::fs::write(path, encode(net)).with_context(|| format!("writing {}", path.display()))
}

pub fn load<T: LeFloat>(path: &Path) -> Result<QNetwork<T>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    decode(&bytes).with_context(|| format!("loading {}", path.display()))
}
