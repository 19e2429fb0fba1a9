//! The attention family: softmax reference, ReLU linear attention, rotary
//! positional embeddings, and cosine linear attention in naive O(n²) and
//! shared-term O(n) forms.
//!
//! Everything is generic over the scalar so the f32 benchmark path and the
//! f64 correctness path run the same kernels. Row conventions follow the
//! usual "q_i, k_j, v_j are row vectors" layout.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::tensor::{Rng, Tensor};

/// Threshold under which an attention denominator is considered degenerate.
pub const EPS_DEN: f64 = 1e-6;
/// Floor applied to vector norms before normalization.
pub const EPS_NORM: f64 = 1e-12;

#[inline]
fn c<T: Float>(x: f64) -> T {
    T::from(x).unwrap()
}

/// Dense row-major matrix of scalars.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Float> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("zero extent in {rows}x{cols} matrix")));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![T::zero(); rows * cols])
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }
}

impl Matrix<f64> {
    /// Views a rank-2 tensor as a matrix.
    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        if t.rank() != 2 {
            return Err(Error::Shape(format!(
                "expected rank-2 tensor, got {:?}",
                t.shape()
            )));
        }
        Matrix::new(t.shape()[0], t.shape()[1], t.data().to_vec())
    }

    pub fn into_tensor(self) -> Tensor {
        Tensor::new(vec![self.rows, self.cols], self.data).unwrap()
    }
}

/// Q, K, V triplet for one attention call. Q and K share the head dimension;
/// V may have a distinct value dimension.
#[derive(Clone, Debug)]
pub struct AttentionBatch<T> {
    pub q: Matrix<T>,
    pub k: Matrix<T>,
    pub v: Matrix<T>,
}

impl<T: Float> AttentionBatch<T> {
    pub fn new(q: Matrix<T>, k: Matrix<T>, v: Matrix<T>) -> Result<Self> {
        if q.rows != k.rows || q.rows != v.rows {
            return Err(Error::Shape(format!(
                "sequence lengths differ: q {} k {} v {}",
                q.rows, k.rows, v.rows
            )));
        }
        if q.cols != k.cols {
            return Err(Error::Shape(format!(
                "head dims differ: q {} k {}",
                q.cols, k.cols
            )));
        }
        Ok(Self { q, k, v })
    }

    pub fn seq_len(&self) -> usize {
        self.q.rows
    }
}

/// Rotary positional embedding configuration.
///
/// Pair `(x_{2p}, x_{2p+1})` of row `i` is rotated by the angle
/// `positions[i] * base^(-2p/dim)` with the convention
/// `(x, y) -> (x cos θ − y sin θ, x sin θ + y cos θ)`.
#[derive(Clone, Debug)]
pub struct RoPEConfig {
    pub dim: usize,
    pub base: f64,
    pub positions: Vec<i64>,
}

impl RoPEConfig {
    pub fn new(dim: usize, base: f64, positions: Vec<i64>) -> Result<Self> {
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::Shape(format!("RoPE dim must be even, got {dim}")));
        }
        Ok(Self {
            dim,
            base,
            positions,
        })
    }

    /// Frame-index positions `0..n` with the default base 10000.
    pub fn frame_indices(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, 10000.0, (0..n as i64).collect())
    }

    fn rotate_row<T: Float>(&self, row: &mut [T], position: i64) {
        let d = self.dim;
        for p in 0..d / 2 {
            let freq = self.base.powf(-(2.0 * p as f64) / d as f64);
            let theta = position as f64 * freq;
            let (sin, cos) = (c::<T>(theta.sin()), c::<T>(theta.cos()));
            let x = row[2 * p];
            let y = row[2 * p + 1];
            row[2 * p] = x * cos - y * sin;
            row[2 * p + 1] = x * sin + y * cos;
        }
    }
}

/// Applies RoPE row-wise; `positions[i]` rotates row `i`.
pub fn apply_rope<T: Float>(x: &Matrix<T>, cfg: &RoPEConfig) -> Result<Matrix<T>> {
    if x.cols != cfg.dim {
        return Err(Error::Shape(format!(
            "matrix dim {} != RoPE dim {}",
            x.cols, cfg.dim
        )));
    }
    if cfg.positions.len() != x.rows {
        return Err(Error::Shape(format!(
            "{} positions for {} rows",
            cfg.positions.len(),
            x.rows
        )));
    }
    let mut out = x.clone();
    for i in 0..out.rows {
        let pos = cfg.positions[i];
        cfg.rotate_row(out.row_mut(i), pos);
    }
    Ok(out)
}

#[inline]
fn dot<T: Float>(a: &[T], b: &[T]) -> T {
    // Four-lane accumulation: keeps the benchmark kernels out of the
    // strict-order scalar dependency chain.
    let mut s0 = T::zero();
    let mut s1 = T::zero();
    let mut s2 = T::zero();
    let mut s3 = T::zero();
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = 4 * i;
        s0 = s0 + a[j] * b[j];
        s1 = s1 + a[j + 1] * b[j + 1];
        s2 = s2 + a[j + 2] * b[j + 2];
        s3 = s3 + a[j + 3] * b[j + 3];
    }
    for j in 4 * chunks..a.len() {
        s0 = s0 + a[j] * b[j];
    }
    (s0 + s1) + (s2 + s3)
}

#[inline]
fn axpy<T: Float>(acc: &mut [T], w: T, x: &[T]) {
    for (a, &b) in acc.iter_mut().zip(x) {
        *a = *a + w * b;
    }
}

fn normalized_rows<T: Float>(m: &Matrix<T>) -> Matrix<T> {
    let mut out = m.clone();
    let floor = c::<T>(EPS_NORM);
    for i in 0..out.rows {
        let row = out.row_mut(i);
        let norm = dot(row, row).sqrt().max(floor);
        for v in row.iter_mut() {
            *v = *v / norm;
        }
    }
    out
}

/// Softmax attention (the reference oracle family), with 1/sqrt(d) scaling
/// and max-subtraction stabilization. Row i of the output is
/// `Σ_j e^{q_i·k_j/√d} v_j / Σ_j e^{q_i·k_j/√d}`.
pub fn softmax_attention<T: Float>(b: &AttentionBatch<T>) -> Result<Matrix<T>> {
    let n = b.seq_len();
    let (d, dv) = (b.q.cols, b.v.cols);
    let scale = c::<T>(1.0 / (d as f64).sqrt());
    let mut out = Matrix::zeros(n, dv)?;
    let mut scores = vec![T::zero(); n];
    for i in 0..n {
        let q = b.q.row(i);
        let mut max = T::neg_infinity();
        for j in 0..n {
            let s = dot(q, b.k.row(j)) * scale;
            scores[j] = s;
            if s > max {
                max = s;
            }
        }
        let mut den = T::zero();
        for s in scores.iter_mut() {
            *s = (*s - max).exp();
            den = den + *s;
        }
        let acc = out.row_mut(i);
        for j in 0..n {
            axpy(acc, scores[j], b.v.row(j));
        }
        for v in acc.iter_mut() {
            *v = *v / den;
        }
    }
    Ok(out)
}

/// Shared accumulators for feature-mapped linear attention:
/// `s = Σ φ(k_j)ᵀ v_j`, `z = Σ φ(k_j)`, `vsum = Σ v_j`.
#[derive(Clone, Debug)]
pub struct LinearAttentionState<T> {
    pub s: Matrix<T>,
    pub z: Vec<T>,
    pub vsum: Vec<T>,
    pub count: usize,
}

impl<T: Float> LinearAttentionState<T> {
    pub fn new(d: usize, dv: usize) -> Result<Self> {
        Ok(Self {
            s: Matrix::zeros(d, dv)?,
            z: vec![T::zero(); d],
            vsum: vec![T::zero(); dv],
            count: 0,
        })
    }

    /// Accumulates one (feature-mapped key, value) pair.
    pub fn ingest(&mut self, phi_k: &[T], v: &[T]) {
        for (p, &kp) in phi_k.iter().enumerate() {
            axpy(self.s.row_mut(p), kp, v);
        }
        for (z, &kp) in self.z.iter_mut().zip(phi_k) {
            *z = *z + kp;
        }
        for (a, &b) in self.vsum.iter_mut().zip(v) {
            *a = *a + b;
        }
        self.count += 1;
    }

    /// `phi_q · s` into `out`.
    fn apply(&self, phi_q: &[T], out: &mut [T]) {
        for v in out.iter_mut() {
            *v = T::zero();
        }
        for (p, &qp) in phi_q.iter().enumerate() {
            axpy(out, qp, self.s.row(p));
        }
    }
}

/// ReLU linear attention (feature map φ = max(0, ·)), computed through the
/// shared accumulators in O(n·d·d_v). Errors when a query's denominator
/// `φ(q_i)·Σφ(k_j)` is at or below [`EPS_DEN`].
pub fn relu_linear_attention<T: Float>(b: &AttentionBatch<T>) -> Result<Matrix<T>> {
    let n = b.seq_len();
    let (d, dv) = (b.q.cols, b.v.cols);
    let mut state = LinearAttentionState::new(d, dv)?;
    let mut phi = vec![T::zero(); d];
    for j in 0..n {
        for (p, &x) in phi.iter_mut().zip(b.k.row(j)) {
            *p = x.max(T::zero());
        }
        state.ingest(&phi, b.v.row(j));
    }
    let mut out = Matrix::zeros(n, dv)?;
    for i in 0..n {
        for (p, &x) in phi.iter_mut().zip(b.q.row(i)) {
            *p = x.max(T::zero());
        }
        let den = dot(&phi, &state.z);
        if den.to_f64().unwrap() <= EPS_DEN {
            return Err(Error::DegenerateSimilarity {
                row: i,
                denominator: den.to_f64().unwrap(),
                threshold: EPS_DEN,
            });
        }
        state.apply(&phi, out.row_mut(i));
        for v in out.row_mut(i).iter_mut() {
            *v = *v / den;
        }
    }
    Ok(out)
}

fn maybe_rope<T: Float>(m: Matrix<T>, rope: Option<&RoPEConfig>) -> Result<Matrix<T>> {
    match rope {
        Some(cfg) => apply_rope(&m, cfg),
        None => Ok(m),
    }
}

/// Direct O(n²) evaluation of cosine-similarity linear attention:
/// `sim(q_i, k_j) = 1 + q̂_i·k̂_j`, with RoPE (when given) applied to the
/// normalized vectors before the dot product.
pub fn cosine_linear_attention_naive<T: Float>(
    b: &AttentionBatch<T>,
    rope: Option<&RoPEConfig>,
) -> Result<Matrix<T>> {
    let n = b.seq_len();
    let dv = b.v.cols;
    let qh = maybe_rope(normalized_rows(&b.q), rope)?;
    let kh = maybe_rope(normalized_rows(&b.k), rope)?;
    let one = T::one();
    let mut out = Matrix::zeros(n, dv)?;
    for i in 0..n {
        let mut den = T::zero();
        let acc = out.row_mut(i);
        for j in 0..n {
            let sim = one + dot(qh.row(i), kh.row(j));
            den = den + sim;
            axpy(acc, sim, b.v.row(j));
        }
        if den.to_f64().unwrap() < EPS_DEN {
            return Err(Error::DegenerateSimilarity {
                row: i,
                denominator: den.to_f64().unwrap(),
                threshold: EPS_DEN,
            });
        }
        for v in acc.iter_mut() {
            *v = *v / den;
        }
    }
    Ok(out)
}

/// Shared-term cosine linear attention:
/// `out_i = (Σv_j + q̂_i·Σk̂_jᵀv_j) / (n + q̂_i·Σk̂_j)`.
/// The key-side sums are computed once and reused for every query, so the
/// cost is O(n·d·d_v) and the working set O(d·d_v) beyond inputs/outputs.
pub fn cosine_linear_attention_fast<T: Float>(
    b: &AttentionBatch<T>,
    rope: Option<&RoPEConfig>,
) -> Result<Matrix<T>> {
    let n = b.seq_len();
    let (d, dv) = (b.q.cols, b.v.cols);
    let qh = maybe_rope(normalized_rows(&b.q), rope)?;
    let kh = maybe_rope(normalized_rows(&b.k), rope)?;
    let mut state = LinearAttentionState::new(d, dv)?;
    for j in 0..n {
        state.ingest(kh.row(j), b.v.row(j));
    }
    let n_t = c::<T>(n as f64);
    let mut out = Matrix::zeros(n, dv)?;
    let mut num = vec![T::zero(); dv];
    for i in 0..n {
        let den = n_t + dot(qh.row(i), &state.z);
        if den.to_f64().unwrap() < EPS_DEN {
            return Err(Error::DegenerateSimilarity {
                row: i,
                denominator: den.to_f64().unwrap(),
                threshold: EPS_DEN,
            });
        }
        state.apply(qh.row(i), &mut num);
        let acc = out.row_mut(i);
        for ((o, &nm), &vs) in acc.iter_mut().zip(&num).zip(&state.vsum) {
            *o = (vs + nm) / den;
        }
    }
    Ok(out)
}

/// A (q, k, positions) pair showing that RoPE rotations of nonnegative
/// feature-mapped vectors can have a negative inner product.
#[derive(Clone, Debug)]
pub struct NegativityWitness {
    pub q: Vec<f64>,
    pub k: Vec<f64>,
    pub pos_q: i64,
    pub pos_k: i64,
    pub inner_product: f64,
}

/// Searches random nonnegative φ(q), φ(k) and integer position pairs for a
/// witness with `[R_i φ(q)]·[R_j φ(k)] < 0`, demonstrating why ReLU linear
/// attention cannot carry RoPE directly.
pub fn demonstrate_rope_relu_negativity(
    rng: &mut Rng,
    d: usize,
    trials: usize,
) -> Result<NegativityWitness> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::Shape(format!("dim must be even, got {d}")));
    }
    for _ in 0..trials {
        let q: Vec<f64> = (0..d).map(|_| rng.uniform()).collect();
        let k: Vec<f64> = (0..d).map(|_| rng.uniform()).collect();
        let pos_q = rng.uniform_int(0, 31);
        let pos_k = rng.uniform_int(0, 31);
        let cfg = RoPEConfig::new(d, 10000.0, vec![pos_q, pos_k])?;
        let m = Matrix::new(2, d, q.iter().chain(&k).copied().collect())?;
        let rotated = apply_rope(&m, &cfg)?;
        let inner = dot(rotated.row(0), rotated.row(1));
        if inner < 0.0 {
            return Ok(NegativityWitness {
                q,
                k,
                pos_q,
                pos_k,
                inner_product: inner,
            });
        }
    }
    Err(Error::SearchExhausted { trials })
}

/// Temporal attention over the frame axis: for each spatial token
/// independently, runs shared-term cosine linear attention over the N frame
/// positions with Q = K = V = that token's frame sequence and RoPE positions
/// equal to the frame indices.
pub fn temporal_attention_over_frames(x: &Tensor, rope: &RoPEConfig) -> Result<Tensor> {
    if x.rank() != 3 {
        return Err(Error::Shape(format!(
            "expected (frames, tokens, dim), got {:?}",
            x.shape()
        )));
    }
    let (n, tokens, d) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    if rope.dim != d {
        return Err(Error::Shape(format!(
            "RoPE dim {} != feature dim {d}",
            rope.dim
        )));
    }
    if rope.positions.len() != n {
        return Err(Error::Shape(format!(
            "{} RoPE positions for {n} frames",
            rope.positions.len()
        )));
    }
    let mut out = Tensor::zeros(x.shape())?;
    for tok in 0..tokens {
        let mut rows = Vec::with_capacity(n * d);
        for f in 0..n {
            let base = (f * tokens + tok) * d;
            rows.extend_from_slice(&x.data()[base..base + d]);
        }
        let m = Matrix::new(n, d, rows)?;
        let batch = AttentionBatch::new(m.clone(), m.clone(), m)?;
        let res = cosine_linear_attention_fast(&batch, Some(rope))?;
        for f in 0..n {
            let base = (f * tokens + tok) * d;
            out.data_mut()[base..base + d].copy_from_slice(res.row(f));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::randn;

    fn random_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Matrix<f64> {
        Matrix::new(
            rows,
            cols,
            (0..rows * cols).map(|_| rng.standard_normal()).collect(),
        )
        .unwrap()
    }

    fn random_batch(rng: &mut Rng, n: usize, d: usize, dv: usize) -> AttentionBatch<f64> {
        AttentionBatch::new(
            random_matrix(rng, n, d),
            random_matrix(rng, n, d),
            random_matrix(rng, n, dv),
        )
        .unwrap()
    }

    fn max_rel_err(a: &Matrix<f64>, b: &Matrix<f64>) -> f64 {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-12))
            .fold(0.0, f64::max)
    }

    #[test]
    fn softmax_uniform_weights_for_identical_keys() {
        let mut rng = Rng::new(1);
        let q = random_matrix(&mut rng, 5, 4);
        let krow: Vec<f64> = (0..4).map(|_| rng.standard_normal()).collect();
        let k = Matrix::from_fn(5, 4, |_, j| krow[j]).unwrap();
        let v = random_matrix(&mut rng, 5, 3);
        let out = softmax_attention(&AttentionBatch::new(q, k, v.clone()).unwrap()).unwrap();
        for i in 0..5 {
            for j in 0..3 {
                let mean = (0..5).map(|r| v.row(r)[j]).sum::<f64>() / 5.0;
                assert!((out.row(i)[j] - mean).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn softmax_single_key_returns_value() {
        let mut rng = Rng::new(2);
        let b = random_batch(&mut rng, 1, 4, 3);
        let out = softmax_attention(&b).unwrap();
        for j in 0..3 {
            assert_eq!(out.row(0)[j], b.v.row(0)[j]);
        }
    }

    #[test]
    fn softmax_matches_unstabilized_direct_sum() {
        let mut rng = Rng::new(3);
        let b = random_batch(&mut rng, 8, 4, 4);
        let out = softmax_attention(&b).unwrap();
        // Direct evaluation without max-subtraction.
        let scale = 1.0 / 2.0;
        let mut oracle = Matrix::zeros(8, 4).unwrap();
        for i in 0..8 {
            let mut den = 0.0;
            for j in 0..8 {
                let w = (dot(b.q.row(i), b.k.row(j)) * scale).exp();
                den += w;
                axpy(oracle.row_mut(i), w, b.v.row(j));
            }
            for v in oracle.row_mut(i).iter_mut() {
                *v /= den;
            }
        }
        assert!(max_rel_err(&out, &oracle) < 1e-12);
    }

    #[test]
    fn relu_linear_uniform_for_identical_nonneg_keys() {
        let mut rng = Rng::new(4);
        let q = Matrix::from_fn(6, 4, |_, _| rng.uniform()).unwrap();
        let krow: Vec<f64> = (0..4).map(|_| rng.uniform()).collect();
        let k = Matrix::from_fn(6, 4, |_, j| krow[j]).unwrap();
        let v = random_matrix(&mut rng, 6, 2);
        let out = relu_linear_attention(&AttentionBatch::new(q, k, v.clone()).unwrap()).unwrap();
        for i in 0..6 {
            for j in 0..2 {
                let mean = (0..6).map(|r| v.row(r)[j]).sum::<f64>() / 6.0;
                assert!((out.row(i)[j] - mean).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn relu_linear_degenerate_query_errors() {
        let q = Matrix::new(1, 2, vec![-1.0, -2.0]).unwrap();
        let k = Matrix::new(1, 2, vec![1.0, 1.0]).unwrap();
        let v = Matrix::new(1, 2, vec![1.0, 1.0]).unwrap();
        let err = relu_linear_attention(&AttentionBatch::new(q, k, v).unwrap()).unwrap_err();
        assert!(matches!(
            err,
            Error::DegenerateSimilarity { row: 0, .. }
        ));
    }

    #[test]
    fn relu_linear_matches_double_loop_oracle() {
        let mut rng = Rng::new(5);
        let q = Matrix::from_fn(16, 8, |_, _| rng.uniform()).unwrap();
        let k = Matrix::from_fn(16, 8, |_, _| rng.uniform()).unwrap();
        let v = random_matrix(&mut rng, 16, 5);
        let b = AttentionBatch::new(q, k, v).unwrap();
        let out = relu_linear_attention(&b).unwrap();
        let relu = |x: f64| x.max(0.0);
        let mut oracle = Matrix::zeros(16, 5).unwrap();
        for i in 0..16 {
            let phi_q: Vec<f64> = b.q.row(i).iter().map(|&x| relu(x)).collect();
            let mut den = 0.0;
            for j in 0..16 {
                let phi_k: Vec<f64> = b.k.row(j).iter().map(|&x| relu(x)).collect();
                let sim = dot(&phi_q, &phi_k);
                den += sim;
                axpy(oracle.row_mut(i), sim, b.v.row(j));
            }
            for x in oracle.row_mut(i).iter_mut() {
                *x /= den;
            }
        }
        assert!(max_rel_err(&out, &oracle) < 1e-12);
    }

    #[test]
    fn rope_position_zero_is_identity() {
        let mut rng = Rng::new(6);
        let x = random_matrix(&mut rng, 3, 8);
        let cfg = RoPEConfig::new(8, 10000.0, vec![0, 0, 0]).unwrap();
        assert_eq!(apply_rope(&x, &cfg).unwrap(), x);
    }

    #[test]
    fn rope_preserves_row_norms() {
        let mut rng = Rng::new(7);
        let x = random_matrix(&mut rng, 4, 8);
        let cfg = RoPEConfig::new(8, 10000.0, vec![1, 5, -3, 100]).unwrap();
        let y = apply_rope(&x, &cfg).unwrap();
        for i in 0..4 {
            let nx = dot(x.row(i), x.row(i)).sqrt();
            let ny = dot(y.row(i), y.row(i)).sqrt();
            assert!((nx - ny).abs() / nx < 1e-12);
        }
    }

    #[test]
    fn rope_d2_position_one_pins_convention() {
        // (1, 0) rotated by angle 1: (cos 1, sin 1) under the documented
        // (x cos θ − y sin θ, x sin θ + y cos θ) convention.
        let x = Matrix::new(1, 2, vec![1.0, 0.0]).unwrap();
        let cfg = RoPEConfig::new(2, 10000.0, vec![1]).unwrap();
        let y = apply_rope(&x, &cfg).unwrap();
        assert!((y.row(0)[0] - 1.0f64.cos()).abs() < 1e-15);
        assert!((y.row(0)[1] - 1.0f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn rope_rejects_odd_dim() {
        assert!(RoPEConfig::new(3, 10000.0, vec![0]).is_err());
    }

    #[test]
    fn rope_inner_product_depends_on_relative_position_only() {
        let mut rng = Rng::new(8);
        let q = random_matrix(&mut rng, 1, 8);
        let k = random_matrix(&mut rng, 1, 8);
        let pairs = [(0i64, 3i64), (5, 8), (-2, 1), (100, 103)];
        let mut inners = Vec::new();
        for (i, j) in pairs {
            let cfg = RoPEConfig::new(8, 10000.0, vec![i, j]).unwrap();
            let m = Matrix::new(2, 8, q.data().iter().chain(k.data()).copied().collect()).unwrap();
            let r = apply_rope(&m, &cfg).unwrap();
            inners.push(dot(r.row(0), r.row(1)));
        }
        for w in inners.windows(2) {
            assert!((w[0] - w[1]).abs() < 1e-12, "inners {inners:?}");
        }
    }

    #[test]
    fn negativity_antipodal_hand_case() {
        // d=2, q=k=(1,0), relative angle π: inner product −1.
        let m = Matrix::new(2, 2, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        // base irrelevant at d=2 pair 0: freq 1, so positions directly set angles.
        let cfg = RoPEConfig::new(2, 10000.0, vec![0, 0]).unwrap();
        let _ = cfg;
        let theta = std::f64::consts::PI;
        let rot = |v: &[f64], t: f64| vec![v[0] * t.cos() - v[1] * t.sin(), v[0] * t.sin() + v[1] * t.cos()];
        let a = rot(m.row(0), 0.0);
        let b = rot(m.row(1), theta);
        assert!((dot(&a, &b) - (-1.0)).abs() < 1e-12);
    }

    #[test]
    fn negativity_witness_found_seed3() {
        let mut rng = Rng::new(3);
        let w = demonstrate_rope_relu_negativity(&mut rng, 8, 10_000).unwrap();
        assert!(w.inner_product < 0.0);
        assert!(w.q.iter().all(|&x| x >= 0.0));
        assert!(w.k.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn negativity_zero_trials_exhausts() {
        let mut rng = Rng::new(3);
        let err = demonstrate_rope_relu_negativity(&mut rng, 8, 0).unwrap_err();
        assert!(matches!(err, Error::SearchExhausted { trials: 0 }));
    }

    #[test]
    fn cosine_single_key_returns_value() {
        let mut rng = Rng::new(9);
        let b = random_batch(&mut rng, 1, 4, 3);
        for out in [
            cosine_linear_attention_naive(&b, None).unwrap(),
            cosine_linear_attention_fast(&b, None).unwrap(),
        ] {
            for j in 0..3 {
                assert!((out.row(0)[j] - b.v.row(0)[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cosine_orthogonal_queries_give_mean_of_values() {
        // q along e0, keys along e1/e2: all cosines zero, sims all 1.
        let q = Matrix::new(3, 4, vec![1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0])
            .unwrap();
        let k = Matrix::new(3, 4, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0])
            .unwrap();
        let mut rng = Rng::new(10);
        let v = random_matrix(&mut rng, 3, 2);
        let out =
            cosine_linear_attention_naive(&AttentionBatch::new(q, k, v.clone()).unwrap(), None)
                .unwrap();
        for i in 0..3 {
            for j in 0..2 {
                let mean = (0..3).map(|r| v.row(r)[j]).sum::<f64>() / 3.0;
                assert!((out.row(i)[j] - mean).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cosine_antipodal_pair_errors() {
        let q = Matrix::new(1, 2, vec![1.0, 0.0]).unwrap();
        let k = Matrix::new(1, 2, vec![-1.0, 0.0]).unwrap();
        let v = Matrix::new(1, 2, vec![1.0, 1.0]).unwrap();
        let b = AttentionBatch::new(q, k, v).unwrap();
        assert!(matches!(
            cosine_linear_attention_naive(&b, None),
            Err(Error::DegenerateSimilarity { row: 0, .. })
        ));
        assert!(matches!(
            cosine_linear_attention_fast(&b, None),
            Err(Error::DegenerateSimilarity { row: 0, .. })
        ));
    }

    #[test]
    fn cosine_fast_matches_naive_with_and_without_rope() {
        let mut rng = Rng::new(11);
        for n in [2usize, 5, 17, 64] {
            let b = random_batch(&mut rng, n, 8, 6);
            let rope = RoPEConfig::frame_indices(8, n).unwrap();
            for cfg in [None, Some(&rope)] {
                let naive = cosine_linear_attention_naive(&b, cfg).unwrap();
                let fast = cosine_linear_attention_fast(&b, cfg).unwrap();
                assert!(
                    max_rel_err(&naive, &fast) < 1e-10,
                    "n={n} rope={} err={}",
                    cfg.is_some(),
                    max_rel_err(&naive, &fast)
                );
            }
        }
    }

    #[test]
    fn cosine_similarity_in_zero_two_range() {
        let mut rng = Rng::new(12);
        for _ in 0..200 {
            let q = random_matrix(&mut rng, 1, 6);
            let k = random_matrix(&mut rng, 1, 6);
            let qh = normalized_rows(&q);
            let kh = normalized_rows(&k);
            let sim = 1.0 + dot(qh.row(0), kh.row(0));
            assert!((0.0..=2.0 + 1e-12).contains(&sim), "sim {sim}");
        }
    }

    #[test]
    fn outputs_stay_in_value_hull() {
        let mut rng = Rng::new(13);
        let b = random_batch(&mut rng, 12, 6, 4);
        let nonneg = AttentionBatch::new(
            Matrix::from_fn(12, 6, |_, _| rng.uniform()).unwrap(),
            Matrix::from_fn(12, 6, |_, _| rng.uniform()).unwrap(),
            b.v.clone(),
        )
        .unwrap();
        let outs = [
            softmax_attention(&b).unwrap(),
            relu_linear_attention(&nonneg).unwrap(),
            cosine_linear_attention_naive(&b, None).unwrap(),
            cosine_linear_attention_fast(&b, None).unwrap(),
        ];
        for out in outs {
            for j in 0..4 {
                let lo = (0..12).map(|r| b.v.row(r)[j]).fold(f64::INFINITY, f64::min);
                let hi = (0..12)
                    .map(|r| b.v.row(r)[j])
                    .fold(f64::NEG_INFINITY, f64::max);
                for i in 0..12 {
                    let x = out.row(i)[j];
                    assert!(x >= lo - 1e-9 && x <= hi + 1e-9, "{x} outside [{lo},{hi}]");
                }
            }
        }
    }

    #[test]
    fn adding_constant_to_values_translates_output() {
        let mut rng = Rng::new(14);
        let b = random_batch(&mut rng, 10, 6, 3);
        let shift = [0.7, -1.3, 2.2];
        let v2 = Matrix::from_fn(10, 3, |i, j| b.v.row(i)[j] + shift[j]).unwrap();
        let b2 = AttentionBatch::new(b.q.clone(), b.k.clone(), v2).unwrap();
        type AttnFn = fn(&AttentionBatch<f64>) -> Result<Matrix<f64>>;
        let cases: [(AttnFn, &str); 2] = [
            (|x| cosine_linear_attention_fast(x, None), "cosine"),
            (|x| softmax_attention(x), "softmax"),
        ];
        for (f, name) in cases {
            let a = f(&b).unwrap();
            let c = f(&b2).unwrap();
            for i in 0..10 {
                for j in 0..3 {
                    assert!(
                        (c.row(i)[j] - a.row(i)[j] - shift[j]).abs() < 1e-12,
                        "{name} translation failed"
                    );
                }
            }
        }
    }

    #[test]
    fn temporal_attention_single_frame_is_identity_on_values() {
        let mut rng = Rng::new(15);
        let x = randn(&mut rng, &[1, 6, 8]).unwrap();
        let rope = RoPEConfig::frame_indices(8, 1).unwrap();
        let y = temporal_attention_over_frames(&x, &rope).unwrap();
        for (a, b) in x.data().iter().zip(y.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn temporal_attention_identical_frames_stay_identical() {
        let mut rng = Rng::new(16);
        let frame = randn(&mut rng, &[9, 8]).unwrap();
        let x = Tensor::stack_axis0(&[&frame, &frame, &frame, &frame]).unwrap();
        let rope = RoPEConfig::frame_indices(8, 4).unwrap();
        let y = temporal_attention_over_frames(&x, &rope).unwrap();
        let f0 = y.index_axis0(0).unwrap();
        for f in 1..4 {
            let fi = y.index_axis0(f).unwrap();
            for (a, b) in f0.data().iter().zip(fi.data()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn temporal_attention_matches_per_token_naive() {
        let mut rng = Rng::new(17);
        let x = randn(&mut rng, &[4, 9, 8]).unwrap();
        let rope = RoPEConfig::frame_indices(8, 4).unwrap();
        let y = temporal_attention_over_frames(&x, &rope).unwrap();
        for tok in 0..9 {
            let mut rows = Vec::new();
            for f in 0..4 {
                let base = (f * 9 + tok) * 8;
                rows.extend_from_slice(&x.data()[base..base + 8]);
            }
            let m = Matrix::new(4, 8, rows).unwrap();
            let batch = AttentionBatch::new(m.clone(), m.clone(), m).unwrap();
            let naive = cosine_linear_attention_naive(&batch, Some(&rope)).unwrap();
            for f in 0..4 {
                let base = (f * 9 + tok) * 8;
                for j in 0..8 {
                    assert!((y.data()[base + j] - naive.row(f)[j]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn f32_kernels_agree_with_f64() {
        let mut rng = Rng::new(18);
        let b = random_batch(&mut rng, 24, 8, 8);
        let b32 = AttentionBatch::new(
            Matrix::new(24, 8, b.q.data().iter().map(|&x| x as f32).collect()).unwrap(),
            Matrix::new(24, 8, b.k.data().iter().map(|&x| x as f32).collect()).unwrap(),
            Matrix::new(24, 8, b.v.data().iter().map(|&x| x as f32).collect()).unwrap(),
        )
        .unwrap();
        let y64 = cosine_linear_attention_fast(&b, None).unwrap();
        let y32 = cosine_linear_attention_fast(&b32, None).unwrap();
        for (a, b) in y64.data().iter().zip(y32.data()) {
            assert!((a - *b as f64).abs() < 1e-4);
        }
    }
}
