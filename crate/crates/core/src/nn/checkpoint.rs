//! Flat binary parameter blobs.
//!
//! Layout (all little-endian): magic `AGNN`, `u16` version, `u32` layer
//! count, `layer count + 1` dims as `u32`, then for each layer its weights
//! row-major as `(fan_out, fan_in)` followed by its biases, all `f64`.

use std::path::Path;

use ndarray::{Array1, Array2};

use super::mlp::{Layer, Mlp};
use super::NnError;

pub const MAGIC: &[u8; 4] = b"AGNN";
pub const VERSION: u16 = 1;

pub fn to_bytes(mlp: &Mlp) -> Vec<u8> {
    let mut out = Vec::with_capacity(10 + 4 * mlp.dims().len() + 8 * mlp.parameter_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(mlp.layers().len() as u32).to_le_bytes());
    for &d in mlp.dims() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for layer in mlp.layers() {
        for v in layer.weights.iter().chain(layer.bias.iter()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| NnError::Format(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, NnError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, NnError> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| NnError::Format("size overflow".into()))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn from_bytes(buf: &[u8]) -> Result<Mlp, NnError> {
    let mut cur = Cursor { buf, pos: 0 };
    if cur.take(4)? != MAGIC {
        return Err(NnError::Format("bad magic".into()));
    }
    let version = cur.u16()?;
    if version != VERSION {
        return Err(NnError::Format(format!("unsupported version {version}")));
    }
    let layer_count = cur.u32()? as usize;
    if layer_count == 0 {
        return Err(NnError::Format("no layers".into()));
    }
    let dims = (0..=layer_count).map(|_| cur.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
    let mut layers = Vec::with_capacity(layer_count);
    for w in dims.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let weights = cur.f64s(fan_in * fan_out)?;
        let bias = cur.f64s(fan_out)?;
        layers.push(Layer {
            weights: Array2::from_shape_vec((fan_out, fan_in), weights).map_err(|e| NnError::Format(e.to_string()))?,
            bias: Array1::from(bias),
        });
    }
    if cur.pos != buf.len() {
        return Err(NnError::Format(format!("{} trailing bytes", buf.len() - cur.pos)));
    }
    Mlp::from_layers(layers)
}

pub fn save(mlp: &Mlp, path: &Path) -> Result<(), NnError> {
    std::fs::write(path, to_bytes(mlp)).map_err(|e| NnError::Io(format!("{}: {e}", path.display())))
}

pub fn load(path: &Path) -> Result<Mlp, NnError> {
    let bytes = std::fs::read(path).map_err(|e| NnError::Io(format!("{}: {e}", path.display())))?;
    from_bytes(&bytes)
}
