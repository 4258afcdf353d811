//! `NGW1` weight files: ASCII header, then little-endian `f32` payloads.
//!
//! ```text
//! NGW1
//! hyper <δ_L> <δ_C> <τ> <n_L> <n_C> <n_P> <dropout> <leaky_slope> <ln_eps> <value_head 0|1>
//! tensor <name> <ndims> <dims...>
//! ...
//! data
//! <payloads in header order, row-major>
//! ```

use std::path::Path;

use super::{HyperParams, NetParams};
use crate::{Error, Result};

const MAGIC: &str = "NGW1";

fn bad(msg: impl Into<String>) -> Error {
    Error::WeightFile(msg.into())
}

pub fn encode_weights(p: &NetParams, h: &HyperParams) -> Vec<u8> {
    let mut header = format!(
        "{MAGIC}\nhyper {} {} {} {} {} {} {} {} {} {}\n",
        h.delta_l,
        h.delta_c,
        h.tau_iters,
        h.n_l,
        h.n_c,
        h.n_p,
        h.dropout,
        h.leaky_slope,
        h.ln_eps,
        u8::from(h.value_head)
    );
    let tensors = p.tensors();
    for (name, dims, _) in &tensors {
        header.push_str(&format!("tensor {name} {}", dims.len()));
        for d in dims {
            header.push_str(&format!(" {d}"));
        }
        header.push('\n');
    }
    header.push_str("data\n");
    let mut out = header.into_bytes();
    for (_, _, data) in &tensors {
        for &x in *data {
            out.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_weights(bytes: &[u8]) -> Result<(NetParams, HyperParams)> {
    let mut pos = 0;
    let mut next_line = || -> Result<&str> {
        let rest = &bytes[pos..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad("truncated header"))?;
        pos += end + 1;
        std::str::from_utf8(&rest[..end]).map_err(|_| bad("header is not UTF-8"))
    };
    if next_line()? != MAGIC {
        return Err(bad("bad magic"));
    }
    let hyper_line = next_line()?.to_string();
    let f: Vec<&str> = hyper_line.split_whitespace().collect();
    if f.len() != 11 || f[0] != "hyper" {
        return Err(bad("malformed hyper line"));
    }
    let int = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad integer `{s}`")));
    let real = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number `{s}`")));
    let h = HyperParams {
        delta_l: int(f[1])?,
        delta_c: int(f[2])?,
        tau_iters: int(f[3])?,
        n_l: int(f[4])?,
        n_c: int(f[5])?,
        n_p: int(f[6])?,
        dropout: real(f[7])?,
        leaky_slope: real(f[8])?,
        ln_eps: real(f[9])?,
        value_head: match f[10] {
            "0" => false,
            "1" => true,
            _ => return Err(bad("value_head flag must be 0 or 1")),
        },
    };
    h.validate().map_err(|e| bad(e.to_string()))?;

    let mut declared = Vec::new();
    loop {
        let line = next_line()?;
        if line == "data" {
            break;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() < 3 || parts[0] != "tensor" {
            return Err(bad(format!("malformed tensor line `{line}`")));
        }
        let ndims = int(parts[2])?;
        if parts.len() != 3 + ndims {
            return Err(bad(format!("tensor `{}` dimension count mismatch", parts[1])));
        }
        let dims = parts[3..].iter().map(|s| int(s)).collect::<Result<Vec<_>>>()?;
        declared.push((parts[1].to_string(), dims));
    }

    let mut params = NetParams::zeros(&h);
    let expected: Vec<(String, Vec<usize>)> = params
        .tensors()
        .into_iter()
        .map(|(n, d, _)| (n, d))
        .collect();
    if declared != expected {
        return Err(bad("tensor shapes do not match the hyperparameters"));
    }
    let mut payload = &bytes[pos..];
    for t in params.tensors_mut() {
        let need = 4 * t.len();
        if payload.len() < need {
            return Err(bad("truncated payload"));
        }
        for (x, chunk) in t.iter_mut().zip(payload[..need].chunks_exact(4)) {
            *x = f32::from_le_bytes(chunk.try_into().expect("4 bytes")) as f64;
        }
        payload = &payload[need..];
    }
    if !payload.is_empty() {
        return Err(bad("trailing bytes after payload"));
    }
    Ok((params, h))
}

pub fn save_weights(p: &NetParams, h: &HyperParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_weights(p, h)).map_err(|e| Error::io(path, e))
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<(NetParams, HyperParams)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_weights(&bytes)
}

/// Loads weights and rejects files whose architecture differs from `expected`.
pub fn load_weights_for(path: impl AsRef<Path>, expected: &HyperParams) -> Result<NetParams> {
    let (p, h) = load_weights(path)?;
    if !h.same_architecture(expected) {
        return Err(bad(format!(
            "architecture mismatch: file has {h:?}, expected {expected:?}"
        )));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact_at_f32() {
        let h = HyperParams::rl();
        let mut p = NetParams::init(&h, 11);
        let bytes = encode_weights(&p, &h);
        let (q, h2) = decode_weights(&bytes).unwrap();
        assert_eq!(h2, h);
        p.round_to_f32();
        assert_eq!(q, p);
        assert_eq!(encode_weights(&q, &h2), bytes);
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.ngw");
        let h = HyperParams::supervised();
        let mut p = NetParams::init(&h, 2);
        save_weights(&p, &h, &path).unwrap();
        p.round_to_f32();
        assert_eq!(load_weights(&path).unwrap(), (p, h.clone()));
        assert!(load_weights_for(&path, &HyperParams::rl()).is_err());
        assert!(load_weights_for(&path, &h).is_ok());
    }

    #[test]
    fn corruption_is_detected() {
        let h = HyperParams::supervised();
        let p = NetParams::init(&h, 2);
        let bytes = encode_weights(&p, &h);
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(decode_weights(&magic).unwrap_err().to_string().contains("magic"));
        assert!(decode_weights(&bytes[..bytes.len() - 3])
            .unwrap_err()
            .to_string()
            .contains("truncated"));
        // Header claiming a value head without its tensors.
        let text = String::from_utf8_lossy(&bytes).replacen(" 0\ntensor", " 1\ntensor", 1);
        assert!(decode_weights(text.as_bytes()).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_weights(&extra).is_err());
    }
}
