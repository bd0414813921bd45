use std::ops::Range;

use rand::Rng;

use super::scalar::Scalar;
use super::tensor::{GridTensor, GRID_SIDE};
use crate::seed::rng_from_seed;

pub const EMBED_DIM: usize = 30;
pub type Embedding = [f64; EMBED_DIM];

/// (input channels, output channels, input side) of the three conv blocks.
const CONVS: [(usize, usize, usize); 3] = [(1, 8, 64), (8, 16, 32), (16, 32, 16)];
const FC1_IN: usize = 32 * 8 * 8;
const FC1_OUT: usize = 128;

const fn conv_w_len(l: usize) -> usize {
    CONVS[l].1 * CONVS[l].0 * 9
}

const OFFSETS: [usize; 11] = {
    let sizes = [
        conv_w_len(0),
        CONVS[0].1,
        conv_w_len(1),
        CONVS[1].1,
        conv_w_len(2),
        CONVS[2].1,
        FC1_OUT * FC1_IN,
        FC1_OUT,
        EMBED_DIM * FC1_OUT,
        EMBED_DIM,
    ];
    let mut out = [0; 11];
    let mut i = 0;
    while i < 10 {
        out[i + 1] = out[i] + sizes[i];
        i += 1;
    }
    out
};

pub const PARAM_COUNT: usize = OFFSETS[10];

const LAYER_NAMES: [&str; 10] = [
    "conv1.w", "conv1.b", "conv2.w", "conv2.b", "conv3.w", "conv3.b", "fc1.w", "fc1.b", "fc2.w", "fc2.b",
];

/// Parameter blocks in storage order, by name.
pub fn param_blocks() -> Vec<(&'static str, Range<usize>)> {
    (0..10).map(|i| (LAYER_NAMES[i], OFFSETS[i]..OFFSETS[i + 1])).collect()
}

fn block(i: usize) -> Range<usize> {
    OFFSETS[i]..OFFSETS[i + 1]
}

/// Weights of the grid encoder, flattened in the order of [`param_blocks`].
/// Conv weights are `[out][in][ky][kx]`, dense weights `[out][in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams<T: Scalar> {
    values: Vec<T>,
}

impl<T: Scalar> EncoderParams<T> {
    pub fn zeros() -> Self {
        Self {
            values: vec![T::zero(); PARAM_COUNT],
        }
    }

    /// Glorot-uniform weights and zero biases.
    pub fn init(seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let mut p = Self::zeros();
        let fans = [
            (9, CONVS[0].1 * 9),
            (CONVS[1].0 * 9, CONVS[1].1 * 9),
            (CONVS[2].0 * 9, CONVS[2].1 * 9),
            (FC1_IN, FC1_OUT),
            (FC1_OUT, EMBED_DIM),
        ];
        for (layer, (fan_in, fan_out)) in fans.iter().enumerate() {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in &mut p.values[block(2 * layer)] {
                *v = T::of(rng.gen_range(-limit..limit));
            }
        }
        p
    }

    pub fn from_values(values: Vec<T>) -> Option<Self> {
        (values.len() == PARAM_COUNT).then_some(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Scalar>(&self) -> EncoderParams<U> {
        EncoderParams {
            values: self.values.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }

    pub fn encode(&self, g: &GridTensor) -> Embedding {
        self.encode_batch(std::slice::from_ref(g)).remove(0)
    }

    pub fn encode_batch(&self, grids: &[GridTensor]) -> Vec<Embedding> {
        let refs: Vec<&GridTensor> = grids.iter().collect();
        let fw = self.forward(&refs);
        fw.embeddings()
    }

    /// Forward pass over a batch, keeping what the backward pass needs.
    pub fn forward(&self, grids: &[&GridTensor]) -> Forward<T> {
        let b = grids.len();
        let mut samples = Vec::with_capacity(b);
        let mut fc_in = vec![T::zero(); b * FC1_IN];
        let mut cols = Vec::new();
        for (i, g) in grids.iter().enumerate() {
            let mut x = vec![T::zero(); GRID_SIDE * GRID_SIDE];
            g.to_values(&mut x);
            let mut cache = SampleCache::default();
            for (l, &(cin, cout, side)) in CONVS.iter().enumerate() {
                let (pre, pooled, arg) = conv_forward(
                    &self.values[block(2 * l)],
                    &self.values[block(2 * l + 1)],
                    cin,
                    cout,
                    side,
                    &x,
                    &mut cols,
                );
                cache.inputs[l] = std::mem::replace(&mut x, pooled);
                cache.pre[l] = pre;
                cache.argmax[l] = arg;
            }
            fc_in[i * FC1_IN..(i + 1) * FC1_IN].copy_from_slice(&x);
            samples.push(cache);
        }
        let mut hidden = vec![T::zero(); b * FC1_OUT];
        dense_forward(&self.values[block(6)], &self.values[block(7)], &fc_in, b, FC1_IN, FC1_OUT, &mut hidden);
        let hidden_pre = hidden.clone();
        for v in &mut hidden {
            if *v < T::zero() {
                *v = T::zero();
            }
        }
        let mut out = vec![T::zero(); b * EMBED_DIM];
        dense_forward(&self.values[block(8)], &self.values[block(9)], &hidden, b, FC1_OUT, EMBED_DIM, &mut out);
        Forward {
            samples,
            fc_in,
            hidden_pre,
            hidden,
            out,
        }
    }

    /// Accumulates into `grad` the parameter gradient for output gradient
    /// `d_out` (`batch × 30`, row-major). Rows that are entirely zero are skipped.
    pub fn backward(&self, fw: &Forward<T>, d_out: &[T], grad: &mut [T]) {
        let active: Vec<usize> = (0..fw.samples.len())
            .filter(|&i| d_out[i * EMBED_DIM..(i + 1) * EMBED_DIM].iter().any(|v| *v != T::zero()))
            .collect();
        let n = active.len();
        if n == 0 {
            return;
        }
        let gather = |src: &[T], width: usize| -> Vec<T> {
            let mut out = Vec::with_capacity(n * width);
            for &i in &active {
                out.extend_from_slice(&src[i * width..(i + 1) * width]);
            }
            out
        };
        let d_out = gather(d_out, EMBED_DIM);
        let hidden = gather(&fw.hidden, FC1_OUT);
        let fc_in = gather(&fw.fc_in, FC1_IN);
        let one = T::one();
        let (w2, rest) = grad[OFFSETS[8]..].split_at_mut(EMBED_DIM * FC1_OUT);
        // dW2 += d_out^T hidden
        T::gemm(EMBED_DIM, n, FC1_OUT, one, &d_out, (1, EMBED_DIM), &hidden, (FC1_OUT, 1), one, w2, (FC1_OUT, 1));
        add_column_sums(&d_out, n, EMBED_DIM, &mut rest[..EMBED_DIM]);
        let mut d_hidden = vec![T::zero(); n * FC1_OUT];
        T::gemm(
            n,
            EMBED_DIM,
            FC1_OUT,
            one,
            &d_out,
            (EMBED_DIM, 1),
            &self.values[block(8)],
            (FC1_OUT, 1),
            T::zero(),
            &mut d_hidden,
            (FC1_OUT, 1),
        );
        for (d, h) in d_hidden.iter_mut().zip(&hidden) {
            if *h <= T::zero() {
                *d = T::zero();
            }
        }
        T::gemm(
            FC1_OUT,
            n,
            FC1_IN,
            one,
            &d_hidden,
            (1, FC1_OUT),
            &fc_in,
            (FC1_IN, 1),
            one,
            &mut grad[block(6)],
            (FC1_IN, 1),
        );
        add_column_sums(&d_hidden, n, FC1_OUT, &mut grad[block(7)]);
        let mut d_fc_in = vec![T::zero(); n * FC1_IN];
        T::gemm(
            n,
            FC1_OUT,
            FC1_IN,
            one,
            &d_hidden,
            (FC1_OUT, 1),
            &self.values[block(6)],
            (FC1_IN, 1),
            T::zero(),
            &mut d_fc_in,
            (FC1_IN, 1),
        );
        let mut cols = Vec::new();
        for (row, &i) in active.iter().enumerate() {
            let cache = &fw.samples[i];
            let mut d = d_fc_in[row * FC1_IN..(row + 1) * FC1_IN].to_vec();
            for l in (0..3).rev() {
                let (cin, cout, side) = CONVS[l];
                let (gw, gb) = {
                    let (head, tail) = grad.split_at_mut(OFFSETS[2 * l + 1]);
                    (&mut head[OFFSETS[2 * l]..], &mut tail[..cout])
                };
                d = conv_backward(
                    &self.values[block(2 * l)],
                    cin,
                    cout,
                    side,
                    &cache.inputs[l],
                    &cache.pre[l],
                    &cache.argmax[l],
                    &d,
                    gw,
                    gb,
                    l > 0,
                    &mut cols,
                );
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SampleCache<T> {
    inputs: [Vec<T>; 3],
    pre: [Vec<T>; 3],
    argmax: [Vec<u32>; 3],
}

/// Intermediate values of a batched forward pass.
#[derive(Debug, Clone)]
pub struct Forward<T> {
    samples: Vec<SampleCache<T>>,
    fc_in: Vec<T>,
    hidden_pre: Vec<T>,
    hidden: Vec<T>,
    out: Vec<T>,
}

impl<T: Scalar> Forward<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn output(&self) -> &[T] {
        &self.out
    }

    pub fn embeddings(&self) -> Vec<Embedding> {
        self.out
            .chunks(EMBED_DIM)
            .map(|c| {
                let mut e = [0.0; EMBED_DIM];
                for (d, s) in e.iter_mut().zip(c) {
                    *d = s.as_f64();
                }
                e
            })
            .collect()
    }

    /// Discrete decisions of the pass: ReLU sides (2 inside the `band` around
    /// zero) and max-pool winners.
    pub fn decision_signature(&self, band: f64) -> Vec<i32> {
        let code = |v: f64| if v.abs() <= band { 2 } else if v > 0.0 { 1 } else { 0 };
        let mut sig = Vec::new();
        for s in &self.samples {
            for l in 0..3 {
                sig.extend(s.pre[l].iter().map(|v| code(v.as_f64())));
                sig.extend(s.argmax[l].iter().map(|&a| a as i32));
            }
        }
        sig.extend(self.hidden_pre.iter().map(|v| code(v.as_f64())));
        sig
    }
}

fn add_column_sums<T: Scalar>(m: &[T], rows: usize, cols: usize, out: &mut [T]) {
    for r in 0..rows {
        for c in 0..cols {
            out[c] = out[c] + m[r * cols + c];
        }
    }
}

/// `out = x W^T + b` for `x` of shape `rows × n_in`.
fn dense_forward<T: Scalar>(w: &[T], b: &[T], x: &[T], rows: usize, n_in: usize, n_out: usize, out: &mut [T]) {
    for r in 0..rows {
        out[r * n_out..(r + 1) * n_out].copy_from_slice(b);
    }
    T::gemm(rows, n_in, n_out, T::one(), x, (n_in, 1), w, (1, n_in), T::one(), out, (n_out, 1));
}

fn im2col<T: Scalar>(x: &[T], cin: usize, side: usize, cols: &mut Vec<T>) {
    let hw = side * side;
    cols.clear();
    cols.resize(cin * 9 * hw, T::zero());
    for c in 0..cin {
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &mut cols[(c * 9 + ky * 3 + kx) * hw..][..hw];
                for y in 0..side {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= side as isize {
                        continue;
                    }
                    let src = &x[c * hw + sy as usize * side..][..side];
                    for xx in 0..side {
                        let sx = xx as isize + kx as isize - 1;
                        if sx >= 0 && sx < side as isize {
                            row[y * side + xx] = src[sx as usize];
                        }
                    }
                }
            }
        }
    }
}

fn col2im_add<T: Scalar>(cols: &[T], cin: usize, side: usize, dx: &mut [T]) {
    let hw = side * side;
    for c in 0..cin {
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &cols[(c * 9 + ky * 3 + kx) * hw..][..hw];
                for y in 0..side {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= side as isize {
                        continue;
                    }
                    for xx in 0..side {
                        let sx = xx as isize + kx as isize - 1;
                        if sx >= 0 && sx < side as isize {
                            let d = &mut dx[c * hw + sy as usize * side + sx as usize];
                            *d = *d + row[y * side + xx];
                        }
                    }
                }
            }
        }
    }
}

/// Conv 3×3 (padding 1) + bias, then ReLU and 2×2 max-pool. Returns the
/// pre-activations, the pooled map and the flat argmax of each pool window.
fn conv_forward<T: Scalar>(
    w: &[T],
    b: &[T],
    cin: usize,
    cout: usize,
    side: usize,
    x: &[T],
    cols: &mut Vec<T>,
) -> (Vec<T>, Vec<T>, Vec<u32>) {
    let hw = side * side;
    im2col(x, cin, side, cols);
    let mut pre = vec![T::zero(); cout * hw];
    for c in 0..cout {
        pre[c * hw..(c + 1) * hw].iter_mut().for_each(|v| *v = b[c]);
    }
    T::gemm(cout, cin * 9, hw, T::one(), w, (cin * 9, 1), cols, (hw, 1), T::one(), &mut pre, (hw, 1));
    let half = side / 2;
    let mut pooled = vec![T::zero(); cout * half * half];
    let mut arg = vec![0u32; cout * half * half];
    for c in 0..cout {
        let plane = &pre[c * hw..(c + 1) * hw];
        for py in 0..half {
            for px in 0..half {
                let mut best_i = (2 * py) * side + 2 * px;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let i = (2 * py + dy) * side + 2 * px + dx;
                    if plane[i] > plane[best_i] {
                        best_i = i;
                    }
                }
                let o = c * half * half + py * half + px;
                // ReLU commutes with max
                pooled[o] = plane[best_i].max(T::zero());
                arg[o] = best_i as u32;
            }
        }
    }
    (pre, pooled, arg)
}

#[allow(clippy::too_many_arguments)]
fn conv_backward<T: Scalar>(
    w: &[T],
    cin: usize,
    cout: usize,
    side: usize,
    x: &[T],
    pre: &[T],
    arg: &[u32],
    d_pooled: &[T],
    gw: &mut [T],
    gb: &mut [T],
    need_dx: bool,
    cols: &mut Vec<T>,
) -> Vec<T> {
    let hw = side * side;
    let half = side / 2;
    let mut d_pre = vec![T::zero(); cout * hw];
    for c in 0..cout {
        for p in 0..half * half {
            let o = c * half * half + p;
            let i = arg[o] as usize;
            if pre[c * hw + i] > T::zero() {
                d_pre[c * hw + i] = d_pooled[o];
            }
        }
        let s = d_pre[c * hw..(c + 1) * hw].iter().fold(T::zero(), |a, &v| a + v);
        gb[c] = gb[c] + s;
    }
    im2col(x, cin, side, cols);
    let k = cin * 9;
    T::gemm(cout, hw, k, T::one(), &d_pre, (hw, 1), cols, (1, hw), T::one(), gw, (k, 1));
    if !need_dx {
        return Vec::new();
    }
    let mut d_cols = vec![T::zero(); k * hw];
    T::gemm(k, cout, hw, T::one(), w, (1, k), &d_pre, (hw, 1), T::zero(), &mut d_cols, (hw, 1));
    let mut dx = vec![T::zero(); cin * hw];
    col2im_add(&d_cols, cin, side, &mut dx);
    dx
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Straight-loop forward pass, written without im2col or GEMM.
    fn reference_forward(p: &[f64], g: &GridTensor) -> Vec<f64> {
        let mut x: Vec<f64> = (0..64 * 64).map(|i| if g.get(i % 64, i / 64) { 1.0 } else { 0.0 }).collect();
        let mut off = 0;
        for &(cin, cout, side) in &CONVS {
            let w = &p[off..off + cout * cin * 9];
            off += cout * cin * 9;
            let b = &p[off..off + cout];
            off += cout;
            let half = side / 2;
            let mut y = vec![0.0; cout * half * half];
            for o in 0..cout {
                let conv = |r: usize, c: usize| -> f64 {
                    let mut s = b[o];
                    for i in 0..cin {
                        for ky in 0..3 {
                            for kx in 0..3 {
                                let (sr, sc) = (r as isize + ky as isize - 1, c as isize + kx as isize - 1);
                                if sr >= 0 && sc >= 0 && (sr as usize) < side && (sc as usize) < side {
                                    s += w[((o * cin + i) * 3 + ky) * 3 + kx]
                                        * x[i * side * side + sr as usize * side + sc as usize];
                                }
                            }
                        }
                    }
                    s.max(0.0)
                };
                for r in 0..half {
                    for c in 0..half {
                        let m = conv(2 * r, 2 * c)
                            .max(conv(2 * r, 2 * c + 1))
                            .max(conv(2 * r + 1, 2 * c))
                            .max(conv(2 * r + 1, 2 * c + 1));
                        y[o * half * half + r * half + c] = m;
                    }
                }
            }
            x = y;
        }
        let dense = |x: &[f64], off: usize, n_in: usize, n_out: usize, relu: bool| -> Vec<f64> {
            (0..n_out)
                .map(|o| {
                    let mut s = p[off + n_out * n_in + o];
                    for i in 0..n_in {
                        s += p[off + o * n_in + i] * x[i];
                    }
                    if relu {
                        s.max(0.0)
                    } else {
                        s
                    }
                })
                .collect()
        };
        let h = dense(&x, off, FC1_IN, FC1_OUT, true);
        off += FC1_OUT * FC1_IN + FC1_OUT;
        dense(&h, off, FC1_OUT, EMBED_DIM, false)
    }

    fn test_grid() -> GridTensor {
        let mut g = GridTensor::default();
        for y in 0..64 {
            for x in 0..64 {
                if (x * 7 + y * 3) % 11 < 4 || (20..30).contains(&x) {
                    g.set(x, y, true);
                }
            }
        }
        g
    }

    #[test]
    fn zero_weights_give_zero() {
        let p = EncoderParams::<f64>::zeros();
        assert_eq!(p.encode(&GridTensor::default()), [0.0; EMBED_DIM]);
    }

    #[test]
    fn parameter_count() {
        assert_eq!(PARAM_COUNT, 72 + 8 + 1152 + 16 + 4608 + 32 + 262144 + 128 + 3840 + 30);
        let blocks = param_blocks();
        assert_eq!(blocks.len(), 10);
        assert_eq!(blocks[9].1.end, PARAM_COUNT);
    }

    #[test]
    fn forward_matches_reference() {
        let mut p = EncoderParams::<f64>::init(0);
        // nonzero biases exercise the bias paths
        for (i, v) in p.values_mut().iter_mut().enumerate() {
            if i % 97 == 0 {
                *v += 0.01;
            }
        }
        let g = test_grid();
        let want = reference_forward(p.values(), &g);
        let got = p.encode(&g);
        assert_eq!(got.len(), EMBED_DIM);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        let p32: EncoderParams<f32> = p.cast();
        for (a, b) in p32.encode(&g).iter().zip(&want) {
            assert!((a - b).abs() < 1e-3);
        }
        assert_eq!(p.encode(&g), got);
    }

    #[test]
    fn batch_matches_single() {
        let p = EncoderParams::<f64>::init(3);
        let g1 = test_grid();
        let g2 = GridTensor::default();
        let both = p.encode_batch(&[g1, g2]);
        assert_eq!(both[0], p.encode(&g1));
        assert_eq!(both[1], p.encode(&g2));
    }
}
