//! Binary checkpoint format (little-endian):
//!
//! ```text
//! "ARLCKPT" <version digit>            8 bytes
//! u64 header length, UTF-8 header      `key=value` lines: config + metadata
//! u64 array count
//! per array: u64 length, length x f64  parameters, then Adam m, then Adam v
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{Activation, NetConfig, NetError, PolicyParameters};

pub const MAGIC_PREFIX: &[u8; 7] = b"ARLCKPT";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CheckpointMeta {
    pub iteration: u64,
    pub seed: u64,
    pub map: String,
    /// Free-form extras, e.g. the base agent and temperature used in training.
    pub extra: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub version: u32,
    pub params: PolicyParameters,
    pub meta: CheckpointMeta,
}

pub fn save_checkpoint(
    params: &PolicyParameters,
    meta: &CheckpointMeta,
    path: &Path,
) -> Result<(), NetError> {
    fs::write(path, encode(params, meta))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, NetError> {
    decode(&fs::read(path)?)
}

pub(crate) fn encode(params: &PolicyParameters, meta: &CheckpointMeta) -> Vec<u8> {
    let cfg = params.config();
    let hidden: Vec<String> = cfg.hidden_sizes.iter().map(usize::to_string).collect();
    let mut header = format!(
        "input_dim={}\nhidden={}\nactivation={}\naction_count={}\nshared_trunk={}\nadam_step={}\niteration={}\nseed={}\nmap={}\n",
        cfg.input_dim,
        hidden.join(","),
        cfg.activation,
        cfg.action_count,
        cfg.shared_trunk,
        params.step,
        meta.iteration,
        meta.seed,
        meta.map,
    );
    for (k, v) in &meta.extra {
        header.push_str(&format!("extra.{k}={v}\n"));
    }

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC_PREFIX);
    out.push(b'0' + VERSION as u8);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    let arrays = params
        .tensors
        .iter()
        .chain(&params.moment1)
        .chain(&params.moment2);
    out.extend_from_slice(&((params.tensors.len() * 3) as u64).to_le_bytes());
    for a in arrays {
        out.extend_from_slice(&(a.len() as u64).to_le_bytes());
        for v in a {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], NetError> {
        if self.buf.len() - self.pos < n {
            return Err(NetError::Corrupt(format!("truncated while reading {what}")));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self, what: &str) -> Result<u64, NetError> {
        let b = self.take(8, what)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }
}

pub(crate) fn decode(bytes: &[u8]) -> Result<Checkpoint, NetError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic = r.take(8, "magic")?;
    if &magic[..7] != MAGIC_PREFIX || !magic[7].is_ascii_digit() {
        return Err(NetError::Corrupt("bad magic".into()));
    }
    let version = u32::from(magic[7] - b'0');
    if version != VERSION {
        return Err(NetError::Version {
            found: version,
            expected: VERSION,
        });
    }
    let hlen = r.u64("header length")? as usize;
    let header = std::str::from_utf8(r.take(hlen, "header")?)
        .map_err(|_| NetError::Corrupt("header is not UTF-8".into()))?;
    let mut fields = BTreeMap::new();
    for line in header.lines() {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| NetError::Corrupt(format!("bad header line `{line}`")))?;
        fields.insert(k.to_owned(), v.to_owned());
    }
    let get = |k: &str| {
        fields
            .get(k)
            .cloned()
            .ok_or_else(|| NetError::Corrupt(format!("missing header field `{k}`")))
    };
    let num = |k: &str| -> Result<u64, NetError> {
        get(k)?
            .parse()
            .map_err(|_| NetError::Corrupt(format!("bad number for `{k}`")))
    };
    let hidden = get("hidden")?
        .split(',')
        .map(|s| s.parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| NetError::Corrupt("bad hidden sizes".into()))?;
    let config = NetConfig {
        input_dim: num("input_dim")? as usize,
        hidden_sizes: hidden,
        activation: Activation::parse(&get("activation")?)
            .ok_or_else(|| NetError::Corrupt("unknown activation".into()))?,
        action_count: num("action_count")? as usize,
        shared_trunk: match get("shared_trunk")?.as_str() {
            "true" => true,
            "false" => false,
            _ => return Err(NetError::Corrupt("bad shared_trunk flag".into())),
        },
    };
    let mut params = PolicyParameters::zeros(config)?;
    params.step = num("adam_step")?;
    let meta = CheckpointMeta {
        iteration: num("iteration")?,
        seed: num("seed")?,
        map: get("map")?,
        extra: fields
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("extra.").map(|k| (k.to_owned(), v.clone())))
            .collect(),
    };

    let n = params.tensors.len();
    let count = r.u64("array count")? as usize;
    if count != 3 * n {
        return Err(NetError::Shape(format!(
            "checkpoint holds {count} arrays, config implies {}",
            3 * n
        )));
    }
    for k in 0..count {
        let target = match k / n {
            0 => &mut params.tensors[k % n],
            1 => &mut params.moment1[k % n],
            _ => &mut params.moment2[k % n],
        };
        let len = r.u64("array length")? as usize;
        if len != target.len() {
            return Err(NetError::Shape(format!(
                "array {k} has length {len}, config implies {}",
                target.len()
            )));
        }
        let raw = r.take(len * 8, "array data")?;
        for (dst, chunk) in target.iter_mut().zip(raw.chunks_exact(8)) {
            *dst = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        }
    }
    if r.pos != bytes.len() {
        return Err(NetError::Corrupt("trailing bytes after arrays".into()));
    }
    Ok(Checkpoint {
        version,
        params,
        meta,
    })
}
