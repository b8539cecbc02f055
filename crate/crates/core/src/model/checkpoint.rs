//! Binary checkpoint format.
//!
//! Layout (little-endian): magic `P2PS`, format version `u32`, architecture
//! fingerprint `u64`, entry count `u32`, then per entry: name length `u32`,
//! UTF-8 name, dtype tag `u8` (0 = f32, 1 = u32), rank `u8`, extents `u32`
//! each, raw values. Optimizer state lives under the `adam.` prefix and the
//! step counters under `meta.`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{ModelConfig, Network, Pix2Pix};
use crate::nn::{Adam, Tensor};
use crate::{Error, Result, Scalar};

pub const MAGIC: &[u8; 4] = b"P2PS";
pub const VERSION: u32 = 1;
/// Prefix reserved for optimizer state.
pub const OPTIMIZER_PREFIX: &str = "adam.";

const MAX_RANK: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum EntryData {
    F32(Vec<f32>),
    U32(Vec<u32>),
}

impl EntryData {
    fn len(&self) -> usize {
        match self {
            EntryData::F32(v) => v.len(),
            EntryData::U32(v) => v.len(),
        }
    }

    fn tag(&self) -> u8 {
        match self {
            EntryData::F32(_) => 0,
            EntryData::U32(_) => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: EntryData,
}

impl Entry {
    pub fn f32(name: impl Into<String>, dims: Vec<usize>, values: Vec<f32>) -> Self {
        Entry {
            name: name.into(),
            dims,
            data: EntryData::F32(values),
        }
    }

    pub fn u32(name: impl Into<String>, values: Vec<u32>) -> Self {
        Entry {
            name: name.into(),
            dims: vec![values.len()],
            data: EntryData::U32(values),
        }
    }
}

/// A named set of tensors tagged with an architecture fingerprint.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub fingerprint: u64,
    pub entries: Vec<Entry>,
}

impl Checkpoint {
    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.fingerprint.to_le_bytes());
        out.extend_from_slice(&u32_of(self.entries.len(), "entry count")?.to_le_bytes());
        for e in &self.entries {
            let expected: usize = e.dims.iter().product();
            if expected != e.data.len() || e.dims.len() > MAX_RANK {
                return Err(Error::Checkpoint(format!(
                    "entry {}: extents {:?} do not describe {} values",
                    e.name,
                    e.dims,
                    e.data.len()
                )));
            }
            out.extend_from_slice(&u32_of(e.name.len(), "name length")?.to_le_bytes());
            out.extend_from_slice(e.name.as_bytes());
            out.push(e.data.tag());
            out.push(e.dims.len() as u8);
            for &d in &e.dims {
                out.extend_from_slice(&u32_of(d, "extent")?.to_le_bytes());
            }
            match &e.data {
                EntryData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
                EntryData::U32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Checkpoint("bad magic; not a checkpoint file".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format version {version} (expected {VERSION})"
            )));
        }
        let fingerprint = u64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
        let count = r.u32()? as usize;
        let mut entries = Vec::with_capacity(count.min(4096));
        for _ in 0..count {
            let name_len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| Error::Checkpoint("entry name is not UTF-8".into()))?
                .to_string();
            let tag = r.take(1)?[0];
            let rank = r.take(1)?[0] as usize;
            if rank > MAX_RANK {
                return Err(Error::Checkpoint(format!("entry {name}: rank {rank} too large")));
            }
            let dims = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let n = dims
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or_else(|| Error::Checkpoint(format!("entry {name}: extents overflow")))?;
            let raw = r.take(n.checked_mul(4).ok_or_else(|| Error::Checkpoint("size overflow".into()))?)?;
            let words = raw.chunks_exact(4).map(|c| c.try_into().expect("4 bytes"));
            let data = match tag {
                0 => EntryData::F32(words.map(f32::from_le_bytes).collect()),
                1 => EntryData::U32(words.map(u32::from_le_bytes).collect()),
                t => return Err(Error::Checkpoint(format!("entry {name}: unknown dtype tag {t}"))),
            };
            entries.push(Entry { name, dims, data });
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!(
                "{} trailing bytes after last entry",
                bytes.len() - r.pos
            )));
        }
        Ok(Checkpoint { fingerprint, entries })
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_bytes()?)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    /// Writes to a sibling temp file and renames, so a crash never leaves a torn checkpoint.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("p2ps.tmp");
        fs::write(&tmp, self.to_bytes()?)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

fn u32_of(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Checkpoint(format!("{what} {v} exceeds u32")))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Checkpoint(format!(
                "truncated file: wanted {n} bytes at offset {}, have {}",
                self.pos,
                self.bytes.len()
            ))
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

fn split_u64(v: u64) -> Vec<u32> {
    vec![v as u32, (v >> 32) as u32]
}

fn join_u64(e: &Entry) -> Result<u64> {
    match &e.data {
        EntryData::U32(v) if v.len() == 2 => Ok(v[0] as u64 | (v[1] as u64) << 32),
        _ => Err(Error::Checkpoint(format!("entry {} is not a u64 counter", e.name))),
    }
}

fn param_name(layer: &str, index: usize) -> &'static str {
    match (layer.ends_with(".bn"), index) {
        (false, 0) => "kernel",
        (false, _) => "bias",
        (true, 0) => "gamma",
        (true, _) => "beta",
    }
}

fn tensor_entry<T: Scalar>(name: String, t: &Tensor<T>) -> Entry {
    let dims = t.shape().dims().to_vec();
    Entry::f32(name, dims, t.data().iter().map(|v| v.to_f32().unwrap_or(f32::NAN)).collect())
}

fn collect_network<T: Scalar>(prefix: &str, net: &dyn Network<T>, opt: &Adam<T>, out: &mut Vec<Entry>) {
    let mut slot = 0;
    for (layer, l) in net.layers() {
        for (j, p) in l.params().into_iter().enumerate() {
            let name = format!("{prefix}.{layer}.{}", param_name(&layer, j));
            out.push(tensor_entry(name.clone(), &p.value));
            if let (Some(m), Some(v)) = (opt.m.get(slot), opt.v.get(slot)) {
                let to32 = |xs: &[T]| xs.iter().map(|x| x.to_f32().unwrap_or(f32::NAN)).collect();
                let dims = p.value.shape().dims().to_vec();
                out.push(Entry::f32(format!("{OPTIMIZER_PREFIX}{name}.m"), dims.clone(), to32(m)));
                out.push(Entry::f32(format!("{OPTIMIZER_PREFIX}{name}.v"), dims, to32(v)));
            }
            slot += 1;
        }
        for (buf, values) in l.buffers() {
            out.push(Entry::f32(
                format!("{prefix}.{layer}.{buf}"),
                vec![values.len()],
                values.iter().map(|x| x.to_f32().unwrap_or(f32::NAN)).collect(),
            ));
        }
    }
    out.push(Entry::u32(format!("{OPTIMIZER_PREFIX}{prefix}.t"), split_u64(opt.t)));
}

struct Lookup<'a> {
    by_name: BTreeMap<&'a str, &'a Entry>,
}

impl<'a> Lookup<'a> {
    fn f32(&self, name: &str, dims: &[usize]) -> Result<&'a [f32]> {
        let e = self
            .by_name
            .get(name)
            .ok_or_else(|| Error::Checkpoint(format!("missing entry {name}")))?;
        match &e.data {
            EntryData::F32(v) if e.dims == dims => Ok(v),
            EntryData::F32(_) => Err(Error::Checkpoint(format!(
                "shape mismatch for entry {name}: file has {:?}, model expects {dims:?}",
                e.dims
            ))),
            EntryData::U32(_) => Err(Error::Checkpoint(format!("entry {name} has dtype u32, expected f32"))),
        }
    }

    fn counter(&self, name: &str) -> Result<u64> {
        let e = self
            .by_name
            .get(name)
            .ok_or_else(|| Error::Checkpoint(format!("missing entry {name}")))?;
        join_u64(e)
    }
}

fn restore_network<T: Scalar>(
    prefix: &str,
    net: &mut dyn Network<T>,
    opt: &mut Adam<T>,
    lookup: &Lookup<'_>,
) -> Result<()> {
    let t = lookup.counter(&format!("{OPTIMIZER_PREFIX}{prefix}.t"))?;
    let mut ms = Vec::new();
    let mut vs = Vec::new();
    for (layer, l) in net.layers_mut() {
        for (j, p) in l.params_mut().into_iter().enumerate() {
            let name = format!("{prefix}.{layer}.{}", param_name(&layer, j));
            let dims = p.value.shape().dims().to_vec();
            let values = lookup.f32(&name, &dims)?;
            for (dst, &src) in p.value.data_mut().iter_mut().zip(values) {
                *dst = T::lit(src as f64);
            }
            if t > 0 {
                let widen = |xs: &[f32]| xs.iter().map(|&x| T::lit(x as f64)).collect::<Vec<T>>();
                ms.push(widen(lookup.f32(&format!("{OPTIMIZER_PREFIX}{name}.m"), &dims)?));
                vs.push(widen(lookup.f32(&format!("{OPTIMIZER_PREFIX}{name}.v"), &dims)?));
            }
        }
        for (buf, values) in l.buffers_mut() {
            let src = lookup.f32(&format!("{prefix}.{layer}.{buf}"), &[values.len()])?;
            for (dst, &s) in values.iter_mut().zip(src) {
                *dst = T::lit(s as f64);
            }
        }
    }
    opt.t = t;
    opt.m = ms;
    opt.v = vs;
    Ok(())
}

impl<T: Scalar> Pix2Pix<T> {
    /// Snapshot of both networks, their optimizer state and the step counter.
    ///
    /// Values are stored as 32-bit floats, so `f32` models round-trip exactly.
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut entries = Vec::new();
        collect_network("gen", &self.generator, &self.gen_opt, &mut entries);
        collect_network("disc", &self.discriminator, &self.disc_opt, &mut entries);
        entries.push(Entry::u32("meta.step", split_u64(self.step)));
        Checkpoint {
            fingerprint: self.config.fingerprint(),
            entries,
        }
    }

    /// Rebuilds a model for `cfg` and overwrites its state from `ckpt`.
    pub fn from_checkpoint(cfg: &ModelConfig, ckpt: &Checkpoint) -> Result<Self> {
        let mut model = Self::new(cfg)?;
        model.restore(ckpt)?;
        Ok(model)
    }

    /// Loads state into an already-built model with a matching architecture.
    pub fn restore(&mut self, ckpt: &Checkpoint) -> Result<()> {
        let lookup = Lookup {
            by_name: ckpt.entries.iter().map(|e| (e.name.as_str(), e)).collect(),
        };
        restore_network("gen", &mut self.generator, &mut self.gen_opt, &lookup)?;
        restore_network("disc", &mut self.discriminator, &mut self.disc_opt, &lookup)?;
        self.step = lookup.counter("meta.step")?;
        let expected = self.config.fingerprint();
        if ckpt.fingerprint != expected {
            return Err(Error::FingerprintMismatch {
                expected,
                found: ckpt.fingerprint,
            });
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_checkpoint().save(path)
    }

    pub fn load(cfg: &ModelConfig, path: &Path) -> Result<Self> {
        Self::from_checkpoint(cfg, &Checkpoint::load(path)?)
    }
}
