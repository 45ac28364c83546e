//! Binary checkpoint format:
//!
//! ```text
//! magic    8 bytes  "PICCKPT\0"
//! version  u32 LE
//! count    u32 LE   number of tensors
//! per tensor:
//!   name_len u32 LE, name (UTF-8)
//!   ndim     u32 LE, dims (u64 LE each)
//!   data     f64 LE, row-major
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{Matrix, ParamSet};

pub const MAGIC: &[u8; 8] = b"PICCKPT\0";
pub const FORMAT_VERSION: u32 = 1;

/// A named tensor read from a checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub value: Matrix,
}

fn encode(sets: &[(&str, &ParamSet)]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let count: usize = sets.iter().map(|(_, s)| s.len()).sum();
    out.extend_from_slice(&(count as u32).to_le_bytes());
    for (prefix, set) in sets {
        for p in set.iter() {
            let name = format!("{prefix}/{}", p.name);
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&2u32.to_le_bytes());
            for d in p.value.shape() {
                out.extend_from_slice(&(*d as u64).to_le_bytes());
            }
            for v in p.value.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

/// Writes the parameter sets, each tensor named `prefix/param`. The file is
/// written to a temporary sibling and renamed into place.
pub fn save_checkpoint(path: &Path, sets: &[(&str, &ParamSet)]) -> Result<()> {
    let bytes = encode(sets);
    let tmp = path.with_extension("partial");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| format!("truncated at byte {} (needed {n} more)", self.pos))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

fn decode(bytes: &[u8]) -> std::result::Result<Vec<Tensor>, String> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err("not a checkpoint (bad magic)".into());
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(format!("format version {version}, this build reads {FORMAT_VERSION}"));
    }
    let count = r.u32()? as usize;
    let mut out = Vec::new();
    for _ in 0..count {
        let len = r.u32()? as usize;
        let name = String::from_utf8(r.take(len)?.to_vec()).map_err(|_| "tensor name is not UTF-8".to_string())?;
        let ndim = r.u32()?;
        if ndim != 2 {
            return Err(format!("tensor {name} has {ndim} dims, expected 2"));
        }
        let rows = r.u64()? as usize;
        let cols = r.u64()? as usize;
        let n = rows.checked_mul(cols).ok_or("tensor size overflows")?;
        let raw = r.take(n.checked_mul(8).ok_or("tensor size overflows")?)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let value = Matrix::from_shape_vec((rows, cols), data).map_err(|e| e.to_string())?;
        out.push(Tensor { name, value });
    }
    if r.pos != bytes.len() {
        return Err(format!("{} trailing bytes", bytes.len() - r.pos));
    }
    Ok(out)
}

/// Parses the whole file; nothing is returned unless every tensor is intact.
pub fn load_checkpoint(path: &Path) -> Result<Vec<Tensor>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|reason| Error::Checkpoint {
        path: path.to_path_buf(),
        reason,
    })
}

/// Loads into existing parameter sets. Every expected tensor must be present
/// with a matching shape before any value is overwritten.
pub fn load_into(path: &Path, sets: &mut [(&str, &mut ParamSet)]) -> Result<()> {
    let tensors = load_checkpoint(path)?;
    let lookup = |name: &str| tensors.iter().find(|t| t.name == name);
    let bad = |reason: String| Error::Checkpoint {
        path: path.to_path_buf(),
        reason,
    };
    for (prefix, set) in sets.iter() {
        for p in set.iter() {
            let name = format!("{prefix}/{}", p.name);
            match lookup(&name) {
                None => return Err(bad(format!("missing tensor {name}"))),
                Some(t) if t.value.shape() != p.value.shape() => {
                    return Err(bad(format!(
                        "tensor {name} has shape {:?}, expected {:?}",
                        t.value.shape(),
                        p.value.shape()
                    )))
                }
                Some(_) => {}
            }
        }
    }
    for (prefix, set) in sets.iter_mut() {
        for p in set.iter_mut() {
            let t = lookup(&format!("{prefix}/{}", p.name)).expect("checked above");
            p.value.assign(&t.value);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_set(rng: &mut ChaCha8Rng) -> ParamSet {
        let mut ps = ParamSet::new();
        ps.add("a.w", Matrix::from_shape_simple_fn((3, 4), || rng.random::<f64>() * 1e3 - 5e2));
        ps.add("a.b", Matrix::from_shape_simple_fn((1, 4), || rng.random::<f64>()));
        ps
    }

    #[test]
    fn round_trip_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let src = random_set(&mut rng);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.bin");
        save_checkpoint(&p, &[("agent0", &src)]).unwrap();
        let mut dst = random_set(&mut rng);
        load_into(&p, &mut [("agent0", &mut dst)]).unwrap();
        for (a, b) in src.iter().zip(dst.iter()) {
            assert!(a.value.iter().zip(b.value.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn truncated_file_leaves_params_untouched() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let src = random_set(&mut rng);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.bin");
        save_checkpoint(&p, &[("x", &src)]).unwrap();
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        let mut dst = random_set(&mut rng);
        let before = dst.clone();
        let err = load_into(&p, &mut [("x", &mut dst)]).unwrap_err();
        assert!(matches!(err, Error::Checkpoint { .. }), "{err}");
        assert_eq!(dst.max_abs_diff(&before), 0.0);
    }

    #[test]
    fn version_mismatch_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let src = random_set(&mut rng);
        let mut bytes = encode(&[("x", &src)]);
        bytes[8] = 9;
        let err = decode(&bytes).unwrap_err();
        assert!(err.contains("version 9"), "{err}");
    }
}
