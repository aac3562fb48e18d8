//! Portable parameter file for trained agents.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "HLAG"  u32 version
//! 8 × f64 observation scale
//! u32 network count
//! per network: u32 layer count, (layers + 1) × u32 widths, layers × u8 activation
//! per network, per layer: weights (row-major, outputs × inputs) then biases, f64
//! ```

use alloc::vec::Vec;

use super::agent::ObsScale;
use super::net::{Activation, Layer, Mlp};
use crate::env::OBS_DIM;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"HLAG";
pub const VERSION: u32 = 1;

/// Networks and input scaling restored from a parameter file.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedAgent {
    pub scale: ObsScale,
    pub networks: Vec<Mlp>,
}

pub fn encode(scale: &ObsScale, networks: &[&Mlp]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for s in scale.0 {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out.extend_from_slice(&(networks.len() as u32).to_le_bytes());
    for net in networks {
        out.extend_from_slice(&(net.layers().len() as u32).to_le_bytes());
        for w in net.sizes() {
            out.extend_from_slice(&(w as u32).to_le_bytes());
        }
        for l in net.layers() {
            out.push(l.activation.code());
        }
    }
    for net in networks {
        for l in net.layers() {
            for v in l.weights.iter().chain(&l.biases) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Format(alloc::format!("truncated parameter file at byte {}", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<SavedAgent> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format("not an agent parameter file".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Version { found: version, expected: VERSION });
    }
    let mut scale = [0.0; OBS_DIM];
    for s in &mut scale {
        *s = r.f64()?;
    }
    let count = r.u32()? as usize;
    let mut shapes = Vec::new();
    for _ in 0..count {
        let layers = r.u32()? as usize;
        if layers == 0 || layers > 64 {
            return Err(Error::Format(alloc::format!("implausible layer count {layers}")));
        }
        let widths = (0..=layers).map(|_| r.u32().map(|w| w as usize)).collect::<Result<Vec<_>>>()?;
        let acts = (0..layers).map(|_| Activation::from_code(r.take(1)?[0])).collect::<Result<Vec<_>>>()?;
        shapes.push((widths, acts));
    }
    let mut networks = Vec::with_capacity(count);
    for (widths, acts) in shapes {
        let mut layers = Vec::with_capacity(acts.len());
        for (i, act) in acts.into_iter().enumerate() {
            let (inputs, outputs) = (widths[i], widths[i + 1]);
            let n = inputs.checked_mul(outputs).ok_or_else(|| Error::Format("layer too large".into()))?;
            let needed = n.saturating_add(outputs).saturating_mul(8);
            if needed > bytes.len().saturating_sub(r.pos) {
                return Err(Error::Format(alloc::format!("truncated parameter file at byte {}", r.pos)));
            }
            let weights = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            let biases = (0..outputs).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            layers.push(Layer { inputs, outputs, weights, biases, activation: act });
        }
        networks.push(Mlp::from_layers(layers).map_err(|e| Error::Format(alloc::format!("{e}")))?);
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(alloc::format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(SavedAgent { scale: ObsScale(scale), networks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SimRng;
    use alloc::vec;
    use rand::SeedableRng;

    fn sample() -> (ObsScale, Mlp, Mlp) {
        let mut rng = SimRng::seed_from_u64(5);
        let a = Mlp::random(&[8, 6, 4], Activation::Relu, Activation::Tanh, 0.5, &mut rng).unwrap();
        let c = Mlp::random(&[12, 5, 1], Activation::Relu, Activation::Identity, 0.5, &mut rng).unwrap();
        let mut s = [1.0; OBS_DIM];
        s[6] = 153.7;
        (ObsScale(s), a, c)
    }

    #[test]
    fn round_trip_is_exact() {
        let (s, a, c) = sample();
        let bytes = encode(&s, &[&a, &c]);
        let back = decode(&bytes).unwrap();
        assert_eq!(back.scale, s);
        assert_eq!(back.networks, vec![a.clone(), c]);
        let x = [0.1, -0.2, 0.97, 0.0, 0.1, -0.99, 3.0, 0.25];
        assert_eq!(back.networks[0].forward(&x).unwrap(), a.forward(&x).unwrap());
    }

    #[test]
    fn truncation_and_version_errors() {
        let (s, a, c) = sample();
        let bytes = encode(&s, &[&a, &c]);
        for cut in [0, 3, 7, 40, bytes.len() - 1] {
            assert!(matches!(decode(&bytes[..cut]), Err(Error::Format(_))), "cut {cut}");
        }
        let mut v2 = bytes.clone();
        v2[4..8].copy_from_slice(&2u32.to_le_bytes());
        assert_eq!(decode(&v2), Err(Error::Version { found: 2, expected: 1 }));
        let mut extra = bytes;
        extra.push(0);
        assert!(matches!(decode(&extra), Err(Error::Format(_))));
    }
}
