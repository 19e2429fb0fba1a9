//! Dense f64 tensors, a reproducible counter-based RNG, and a bit-exact
//! binary tensor file format.
//!
//! All correctness-critical math in this crate runs in f64; f32 appears
//! only in the benchmark kernels. Layout is row-major everywhere so that
//! serialization and oracle comparisons are unambiguous.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Magic tag at the start of every tensor file.
pub const TENSOR_MAGIC: [u8; 8] = *b"MKTENSR\0";

const DTYPE_F32: u8 = 1;
const DTYPE_F64: u8 = 2;

/// Dense multi-dimensional real array in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn checked_numel(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(Error::Shape("empty shape".into()));
    }
    let mut n: usize = 1;
    for &e in shape {
        if e == 0 {
            return Err(Error::Shape(format!("zero extent in shape {shape:?}")));
        }
        n = n
            .checked_mul(e)
            .ok_or_else(|| Error::Shape(format!("shape {shape:?} overflows element count")))?;
    }
    Ok(n)
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n = checked_numel(&shape)?;
        if data.len() != n {
            return Err(Error::Shape(format!(
                "data length {} does not match shape {shape:?} ({n} elements)",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        let n = checked_numel(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        })
    }

    pub fn full(shape: &[usize], value: f64) -> Result<Self> {
        let n = checked_numel(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            data: vec![value; n],
        })
    }

    /// Builds a tensor by evaluating `f` at every multi-index, in row-major order.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let n = checked_numel(shape)?;
        let mut idx = vec![0usize; shape.len()];
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f(&idx));
            for ax in (0..shape.len()).rev() {
                idx[ax] += 1;
                if idx[ax] < shape[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Flat offset of a multi-index.
    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut off = 0;
        for (i, &e) in idx.iter().zip(&self.shape) {
            debug_assert!(*i < e);
            off = off * e + i;
        }
        off
    }

    pub fn at(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let off = self.offset(idx);
        self.data[off] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "shape mismatch: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Tensor {
        self.map(|x| c * x)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.data.iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / self.data.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        let n = checked_numel(shape)?;
        if n != self.data.len() {
            return Err(Error::Shape(format!(
                "cannot reshape {:?} ({} elements) to {shape:?} ({n} elements)",
                self.shape,
                self.data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data: self.data.clone(),
        })
    }

    /// Number of elements in one slice along axis 0.
    pub fn axis0_stride(&self) -> usize {
        self.data.len() / self.shape[0]
    }

    /// Borrow the `i`-th slice along axis 0.
    pub fn axis0_slice(&self, i: usize) -> &[f64] {
        let s = self.axis0_stride();
        &self.data[i * s..(i + 1) * s]
    }

    /// Copy the `i`-th slice along axis 0 into its own tensor.
    pub fn index_axis0(&self, i: usize) -> Result<Tensor> {
        if i >= self.shape[0] {
            return Err(Error::Shape(format!(
                "index {i} out of range for axis 0 of {:?}",
                self.shape
            )));
        }
        Tensor::new(self.shape[1..].to_vec(), self.axis0_slice(i).to_vec())
    }

    /// Concatenate tensors along a new leading axis; all must share a shape.
    pub fn stack_axis0(parts: &[&Tensor]) -> Result<Tensor> {
        if parts.is_empty() {
            return Err(Error::Shape("stack of zero tensors".into()));
        }
        let inner = parts[0].shape();
        let mut data = Vec::with_capacity(parts.len() * parts[0].numel());
        for p in parts {
            if p.shape() != inner {
                return Err(Error::Shape(format!(
                    "stack mismatch: {:?} vs {inner:?}",
                    p.shape()
                )));
            }
            data.extend_from_slice(p.data());
        }
        let mut shape = vec![parts.len()];
        shape.extend_from_slice(inner);
        Tensor::new(shape, data)
    }

    /// 2-D matrix product with accumulation in f64.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        if self.rank() != 2 || other.rank() != 2 {
            return Err(Error::Shape(format!(
                "matmul needs 2-D operands, got {:?} x {:?}",
                self.shape, other.shape
            )));
        }
        let (m, k) = (self.shape[0], self.shape[1]);
        let (k2, n) = (other.shape[0], other.shape[1]);
        if k != k2 {
            return Err(Error::Shape(format!(
                "matmul inner extents differ: {:?} x {:?}",
                self.shape, other.shape
            )));
        }
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let a_row = &self.data[i * k..(i + 1) * k];
            let o_row = &mut out[i * n..(i + 1) * n];
            for (p, &a) in a_row.iter().enumerate() {
                let b_row = &other.data[p * n..(p + 1) * n];
                for (o, &b) in o_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Tensor::new(vec![m, n], out)
    }

    pub fn transpose2(&self) -> Result<Tensor> {
        if self.rank() != 2 {
            return Err(Error::Shape(format!(
                "transpose2 needs a 2-D tensor, got {:?}",
                self.shape
            )));
        }
        let (m, n) = (self.shape[0], self.shape[1]);
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                data[j * m + i] = self.data[i * n + j];
            }
        }
        Tensor::new(vec![n, m], data)
    }
}

/// 2-D matrix product (free-function form of [`Tensor::matmul`]).
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    a.matmul(b)
}

// --- RNG ------------------------------------------------------------------

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer. Bijective on u64.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based deterministic generator.
///
/// Output `i` of stream `seed` is `mix64(seed + (i+1)·GOLDEN)` — the
/// SplitMix64 construction, written as a pure function of (seed, counter)
/// so identical seeds give identical streams on every platform. Normal
/// samples use the Box–Muller cosine branch over two consecutive uniforms.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    counter: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derives an independent child stream. Child `k` of `seed` is the
    /// stream seeded with `mix64(seed ^ mix64((k+1)·GOLDEN))`.
    pub fn split(&self, stream: u64) -> Rng {
        Rng::new(mix64(self.seed ^ mix64(stream.wrapping_add(1).wrapping_mul(GOLDEN))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.seed.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform on the open interval (0, 1): ((x >> 11) + 0.5) / 2^53.
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box–Muller (cosine branch, two uniforms per sample).
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform integer in `[lo, hi]` inclusive, by rejection sampling.
    pub fn uniform_int(&mut self, lo: i64, hi: i64) -> i64 {
        assert!(lo <= hi, "empty range");
        let span = (hi - lo) as u64 + 1;
        // Largest multiple of span that fits in u64; reject above it.
        let zone = u64::MAX - u64::MAX % span;
        loop {
            let x = self.next_u64();
            if x < zone {
                return lo + (x % span) as i64;
            }
        }
    }
}

/// I.i.d. standard normal samples with the given shape.
pub fn randn(rng: &mut Rng, shape: &[usize]) -> Result<Tensor> {
    let n = checked_numel(shape)?;
    let mut data = Vec::with_capacity(n);
    for _ in 0..n {
        data.push(rng.standard_normal());
    }
    Tensor::new(shape.to_vec(), data)
}

// --- Tensor file format -----------------------------------------------------
//
// magic "MKTENSR\0" | dtype: u8 (1 = f32, 2 = f64) | rank: u8 |
// extents: rank x u64 LE | payload: row-major LE values.

/// Writes `t` as an f64 tensor file.
pub fn save_tensor(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(&TENSOR_MAGIC)?;
    w.write_all(&[DTYPE_F64, t.rank() as u8])?;
    for &e in t.shape() {
        w.write_all(&(e as u64).to_le_bytes())?;
    }
    for &v in t.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a tensor file; f32 payloads widen exactly to f64.
pub fn load_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    load_tensor_bytes(&bytes)
}

pub fn load_tensor_bytes(bytes: &[u8]) -> Result<Tensor> {
    if bytes.len() < 10 {
        return Err(Error::Format("file shorter than header".into()));
    }
    if bytes[..8] != TENSOR_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let dtype = bytes[8];
    let rank = bytes[9] as usize;
    let word = match dtype {
        DTYPE_F32 => 4,
        DTYPE_F64 => 8,
        other => return Err(Error::Format(format!("unknown dtype code {other}"))),
    };
    let mut off = 10;
    if bytes.len() < off + 8 * rank {
        return Err(Error::Format("truncated extents".into()));
    }
    let mut shape = Vec::with_capacity(rank);
    for _ in 0..rank {
        let e = u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        shape.push(e as usize);
        off += 8;
    }
    let n = checked_numel(&shape).map_err(|e| Error::Format(format!("bad extents: {e}")))?;
    let need = n
        .checked_mul(word)
        .ok_or_else(|| Error::Format("payload size overflow".into()))?;
    if bytes.len() - off != need {
        return Err(Error::Format(format!(
            "payload is {} bytes, extents imply {need}",
            bytes.len() - off
        )));
    }
    let mut data = Vec::with_capacity(n);
    match dtype {
        DTYPE_F32 => {
            for c in bytes[off..].chunks_exact(4) {
                data.push(f32::from_le_bytes(c.try_into().unwrap()) as f64);
            }
        }
        _ => {
            for c in bytes[off..].chunks_exact(8) {
                data.push(f64::from_le_bytes(c.try_into().unwrap()));
            }
        }
    }
    Tensor::new(shape, data)
}
