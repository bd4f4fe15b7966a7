use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::tensor::Stack;
use crate::error::{Error, Result};

/// Inputs to one denoiser evaluation.
#[derive(Debug, Clone, Copy)]
pub struct DenoiseInput<'a> {
    pub y_t: &'a Stack,
    pub condition: &'a Stack,
    pub t: usize,
    pub k: u32,
}

/// A differentiable map from (noisy state, condition, t, k) to a prediction
/// with the shape of the noisy state.
pub trait Denoise {
    type Cache;

    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    fn forward_cached(&self, input: &DenoiseInput<'_>) -> Result<(Stack, Self::Cache)>;
    /// Adds dL/dθ to `grad` given dL/d(output).
    fn backward(&self, cache: &Self::Cache, grad_out: &Stack, grad: &mut [f64]);

    fn num_params(&self) -> usize {
        self.params().len()
    }

    fn denoise(&self, input: &DenoiseInput<'_>) -> Result<Stack> {
        Ok(self.forward_cached(input)?.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenoiserConfig {
    /// Channels of the refined output (and of the noisy state).
    pub channels: usize,
    pub cond_channels: usize,
    pub width: usize,
    pub blocks: usize,
    /// Length of each sinusoidal embedding (t and k); even.
    pub embed_dim: usize,
    /// Rows are zero-padded unless this is set; columns always wrap.
    pub wrap_rows: bool,
}

impl Default for DenoiserConfig {
    fn default() -> Self {
        Self { channels: 5, cond_channels: 5, width: 32, blocks: 6, embed_dim: 16, wrap_rows: false }
    }
}

impl DenoiserConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.cond_channels == 0 || self.width == 0 || self.embed_dim == 0 || self.embed_dim % 2 != 0 {
            return Err(Error::InvalidArgument(format!("invalid denoiser configuration {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Conv {
    w: usize,
    b: usize,
    cin: usize,
    cout: usize,
}

impl Conv {
    fn len(&self) -> usize {
        self.cout * self.cin * 9 + self.cout
    }

    fn weight(&self, o: usize, i: usize, kr: usize, kc: usize) -> usize {
        self.w + ((o * self.cin + i) * 3 + kr) * 3 + kc
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Layout {
    conv_in: Conv,
    emb_w: usize,
    emb_b: usize,
    blocks: Vec<(Conv, Conv)>,
    conv_out: Conv,
    total: usize,
}

impl Layout {
    fn new(cfg: &DenoiserConfig) -> Self {
        let mut at = 0;
        let mut conv = |cin: usize, cout: usize| {
            let c = Conv { w: at, b: at + cout * cin * 9, cin, cout };
            at += c.len();
            c
        };
        let conv_in = conv(cfg.channels + cfg.cond_channels, cfg.width);
        let blocks = (0..cfg.blocks).map(|_| (conv(cfg.width, cfg.width), conv(cfg.width, cfg.width))).collect();
        let conv_out = conv(cfg.width, cfg.channels);
        let emb_w = at;
        let emb_b = emb_w + cfg.width * 2 * cfg.embed_dim;
        let total = emb_b + cfg.width;
        Self { conv_in, emb_w, emb_b, blocks, conv_out, total }
    }
}

/// Residual convolutional denoiser:
///
/// ```text
/// h₀ = conv_in([y_t, condition]) + W_e·[emb(t), emb(k)] + b_e
/// hⱼ₊₁ = hⱼ + conv_b(silu(conv_a(silu(hⱼ))))
/// out = conv_out(silu(h_B))
/// ```
///
/// All convolutions are 3×3.
#[derive(Debug, Clone, PartialEq)]
pub struct Denoiser {
    config: DenoiserConfig,
    layout: Layout,
    params: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DenoiserCache {
    rows: usize,
    cols: usize,
    input: Vec<f64>,
    features: Vec<f64>,
    /// States h₀..h_B.
    h: Vec<Vec<f64>>,
    /// conv_a outputs of each block.
    a: Vec<Vec<f64>>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

fn silu_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

/// `[sin(x ω₀), cos(x ω₀), sin(x ω₁), ...]` with geometrically spaced ωⱼ.
fn sinusoidal(x: f64, dim: usize, out: &mut Vec<f64>) {
    let half = dim / 2;
    for j in 0..half {
        let freq = libm::exp(-libm::log(10_000.0) * j as f64 / half as f64);
        out.push(libm::sin(x * freq));
        out.push(libm::cos(x * freq));
    }
}

/// Source row of kernel row `kr` for output row `r`.
fn src_row(r: usize, kr: usize, rows: usize, wrap: bool) -> Option<usize> {
    let s = r as isize + kr as isize - 1;
    if (0..rows as isize).contains(&s) {
        Some(s as usize)
    } else if wrap {
        Some(s.rem_euclid(rows as isize) as usize)
    } else {
        None
    }
}

/// `dst[c] += w * src[(c + off) mod n]` for `off` in {-1, 0, 1}.
fn axpy_shift(dst: &mut [f64], src: &[f64], w: f64, off: isize) {
    let n = dst.len();
    match off {
        0 => dst.iter_mut().zip(src).for_each(|(d, s)| *d += w * s),
        1 => {
            dst[..n - 1].iter_mut().zip(&src[1..]).for_each(|(d, s)| *d += w * s);
            dst[n - 1] += w * src[0];
        }
        _ => {
            dst[1..].iter_mut().zip(&src[..n - 1]).for_each(|(d, s)| *d += w * s);
            dst[0] += w * src[n - 1];
        }
    }
}

/// `Σ a[c] * b[(c + off) mod n]`.
fn dot_shift(a: &[f64], b: &[f64], off: isize) -> f64 {
    let n = a.len();
    match off {
        0 => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        1 => a[..n - 1].iter().zip(&b[1..]).map(|(x, y)| x * y).sum::<f64>() + a[n - 1] * b[0],
        _ => a[1..].iter().zip(&b[..n - 1]).map(|(x, y)| x * y).sum::<f64>() + a[0] * b[n - 1],
    }
}

fn conv_forward(c: &Conv, params: &[f64], input: &[f64], rows: usize, cols: usize, wrap: bool) -> Vec<f64> {
    let hw = rows * cols;
    let mut out = vec![0.0; c.cout * hw];
    for o in 0..c.cout {
        let plane = &mut out[o * hw..(o + 1) * hw];
        plane.iter_mut().for_each(|v| *v = params[c.b + o]);
        for i in 0..c.cin {
            let src = &input[i * hw..(i + 1) * hw];
            for kr in 0..3 {
                for kc in 0..3 {
                    let w = params[c.weight(o, i, kr, kc)];
                    if w == 0.0 {
                        continue;
                    }
                    for r in 0..rows {
                        if let Some(sr) = src_row(r, kr, rows, wrap) {
                            axpy_shift(&mut plane[r * cols..(r + 1) * cols], &src[sr * cols..(sr + 1) * cols], w, kc as isize - 1);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Accumulates weight and bias gradients into `grad`, and the input gradient
/// into `grad_in` when given.
#[allow(clippy::too_many_arguments)]
fn conv_backward(
    c: &Conv,
    params: &[f64],
    input: &[f64],
    grad_out: &[f64],
    rows: usize,
    cols: usize,
    wrap: bool,
    grad: &mut [f64],
    mut grad_in: Option<&mut [f64]>,
) {
    let hw = rows * cols;
    for o in 0..c.cout {
        let go = &grad_out[o * hw..(o + 1) * hw];
        grad[c.b + o] += go.iter().sum::<f64>();
        for i in 0..c.cin {
            let src = &input[i * hw..(i + 1) * hw];
            for kr in 0..3 {
                for kc in 0..3 {
                    let off = kc as isize - 1;
                    let widx = c.weight(o, i, kr, kc);
                    let mut acc = 0.0;
                    for r in 0..rows {
                        if let Some(sr) = src_row(r, kr, rows, wrap) {
                            let g_row = &go[r * cols..(r + 1) * cols];
                            acc += dot_shift(g_row, &src[sr * cols..(sr + 1) * cols], off);
                            if let Some(gi) = grad_in.as_deref_mut() {
                                let w = params[widx];
                                if w != 0.0 {
                                    axpy_shift(&mut gi[i * hw + sr * cols..i * hw + (sr + 1) * cols], g_row, w, -off);
                                }
                            }
                        }
                    }
                    grad[widx] += acc;
                }
            }
        }
    }
}

impl Denoiser {
    /// All parameters zero; the output is then the conv_out bias, i.e. zero.
    pub fn zeros(config: DenoiserConfig) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        let params = vec![0.0; layout.total];
        Ok(Self { config, layout, params })
    }

    /// He-style initialisation; the second convolution of each residual
    /// block and the output convolution start small.
    pub fn init(config: DenoiserConfig, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |params: &mut [f64], c: &Conv, gain: f64| {
            let sd = gain * libm::sqrt(2.0 / (c.cin * 9) as f64);
            let normal = Normal::new(0.0, sd).expect("positive sd");
            for p in &mut params[c.w..c.b] {
                *p = normal.sample(&mut rng);
            }
        };
        let layout = net.layout.clone();
        fill(&mut net.params, &layout.conv_in, 1.0);
        for (a, b) in &layout.blocks {
            fill(&mut net.params, a, 1.0);
            fill(&mut net.params, b, 0.1);
        }
        fill(&mut net.params, &layout.conv_out, 0.1);
        let sd = 1.0 / libm::sqrt((2 * config.embed_dim) as f64);
        let normal = Normal::new(0.0, sd).expect("positive sd");
        for p in &mut net.params[layout.emb_w..layout.emb_b] {
            *p = normal.sample(&mut rng);
        }
        Ok(net)
    }

    pub fn from_params(config: DenoiserConfig, params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(config)?;
        if params.len() != net.params.len() {
            return Err(Error::Shape(format!("configuration needs {} parameters, got {}", net.params.len(), params.len())));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("non-finite parameter".into()));
        }
        net.params = params;
        Ok(net)
    }

    pub fn config(&self) -> &DenoiserConfig {
        &self.config
    }

    pub fn into_params(self) -> Vec<f64> {
        self.params
    }

    fn check(&self, input: &DenoiseInput<'_>) -> Result<()> {
        let cfg = &self.config;
        if input.y_t.channels != cfg.channels || input.condition.channels != cfg.cond_channels {
            return Err(Error::Shape(format!(
                "denoiser expects {} state and {} condition channels, got {} and {}",
                cfg.channels, cfg.cond_channels, input.y_t.channels, input.condition.channels
            )));
        }
        if !input.y_t.same_plane(input.condition) {
            return Err(Error::Shape("state and condition planes differ".into()));
        }
        if input.t == 0 || input.k == 0 {
            return Err(Error::InvalidArgument("diffusion step and lead step start at 1".into()));
        }
        Ok(())
    }
}

impl Denoise for Denoiser {
    type Cache = DenoiserCache;

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward_cached(&self, input: &DenoiseInput<'_>) -> Result<(Stack, DenoiserCache)> {
        self.check(input)?;
        let (rows, cols) = (input.y_t.rows, input.y_t.cols);
        let hw = rows * cols;
        let wrap = self.config.wrap_rows;
        let p = &self.params;
        let l = &self.layout;
        let width = self.config.width;

        let mut x = Vec::with_capacity(input.y_t.data.len() + input.condition.data.len());
        x.extend_from_slice(&input.y_t.data);
        x.extend_from_slice(&input.condition.data);

        let mut features = Vec::with_capacity(2 * self.config.embed_dim);
        sinusoidal(input.t as f64, self.config.embed_dim, &mut features);
        sinusoidal(input.k as f64, self.config.embed_dim, &mut features);

        let mut h0 = conv_forward(&l.conv_in, p, &x, rows, cols, wrap);
        let nf = features.len();
        for o in 0..width {
            let row = &p[l.emb_w + o * nf..l.emb_w + (o + 1) * nf];
            let e = p[l.emb_b + o] + row.iter().zip(&features).map(|(w, f)| w * f).sum::<f64>();
            h0[o * hw..(o + 1) * hw].iter_mut().for_each(|v| *v += e);
        }

        let mut hs = Vec::with_capacity(l.blocks.len() + 1);
        let mut as_ = Vec::with_capacity(l.blocks.len());
        hs.push(h0);
        for (ca, cb) in &l.blocks {
            let h = hs.last().expect("h0 pushed");
            let s: Vec<f64> = h.iter().map(|&v| silu(v)).collect();
            let a = conv_forward(ca, p, &s, rows, cols, wrap);
            let sa: Vec<f64> = a.iter().map(|&v| silu(v)).collect();
            let d = conv_forward(cb, p, &sa, rows, cols, wrap);
            let next: Vec<f64> = h.iter().zip(&d).map(|(u, v)| u + v).collect();
            as_.push(a);
            hs.push(next);
        }
        let last: Vec<f64> = hs.last().expect("h0 pushed").iter().map(|&v| silu(v)).collect();
        let out = conv_forward(&l.conv_out, p, &last, rows, cols, wrap);
        let stack = Stack::new(self.config.channels, rows, cols, out)?;
        Ok((stack, DenoiserCache { rows, cols, input: x, features, h: hs, a: as_ }))
    }

    fn backward(&self, cache: &DenoiserCache, grad_out: &Stack, grad: &mut [f64]) {
        let (rows, cols) = (cache.rows, cache.cols);
        let hw = rows * cols;
        let wrap = self.config.wrap_rows;
        let p = &self.params;
        let l = &self.layout;

        let h_last = cache.h.last().expect("cache has h0");
        let s_last: Vec<f64> = h_last.iter().map(|&v| silu(v)).collect();
        let mut g_s = vec![0.0; h_last.len()];
        conv_backward(&l.conv_out, p, &s_last, &grad_out.data, rows, cols, wrap, grad, Some(&mut g_s));
        let mut g_h: Vec<f64> = g_s.iter().zip(h_last).map(|(g, &h)| g * silu_grad(h)).collect();

        for (j, (ca, cb)) in l.blocks.iter().enumerate().rev() {
            let h = &cache.h[j];
            let a = &cache.a[j];
            let sa: Vec<f64> = a.iter().map(|&v| silu(v)).collect();
            let mut g_sa = vec![0.0; a.len()];
            conv_backward(cb, p, &sa, &g_h, rows, cols, wrap, grad, Some(&mut g_sa));
            let g_a: Vec<f64> = g_sa.iter().zip(a).map(|(g, &v)| g * silu_grad(v)).collect();
            let s: Vec<f64> = h.iter().map(|&v| silu(v)).collect();
            let mut g_s = vec![0.0; h.len()];
            conv_backward(ca, p, &s, &g_a, rows, cols, wrap, grad, Some(&mut g_s));
            for ((gh, gs), &hv) in g_h.iter_mut().zip(&g_s).zip(h) {
                *gh += gs * silu_grad(hv);
            }
        }

        let nf = cache.features.len();
        for o in 0..self.config.width {
            let ge: f64 = g_h[o * hw..(o + 1) * hw].iter().sum();
            grad[l.emb_b + o] += ge;
            for (j, f) in cache.features.iter().enumerate() {
                grad[l.emb_w + o * nf + j] += ge * f;
            }
        }
        conv_backward(&l.conv_in, p, &cache.input, &g_h, rows, cols, wrap, grad, None);
    }
}

/// Per-pixel linear map of the stacked inputs plus a bias per output
/// channel; a model whose loss is exactly quadratic in its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearStub {
    pub channels: usize,
    pub cond_channels: usize,
    pub params: Vec<f64>,
}

pub struct LinearCache {
    input: Vec<f64>,
    hw: usize,
}

impl LinearStub {
    pub fn new(channels: usize, cond_channels: usize, seed: u64) -> Self {
        let n = channels * (channels + cond_channels) + channels;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 0.5).expect("positive sd");
        Self { channels, cond_channels, params: (0..n).map(|_| normal.sample(&mut rng)).collect() }
    }
}

impl Denoise for LinearStub {
    type Cache = LinearCache;

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward_cached(&self, input: &DenoiseInput<'_>) -> Result<(Stack, LinearCache)> {
        if input.y_t.channels != self.channels || input.condition.channels != self.cond_channels || !input.y_t.same_plane(input.condition) {
            return Err(Error::Shape("linear stub input shape mismatch".into()));
        }
        let hw = input.y_t.plane_len();
        let cin = self.channels + self.cond_channels;
        let mut x = input.y_t.data.clone();
        x.extend_from_slice(&input.condition.data);
        let mut out = vec![0.0; self.channels * hw];
        for o in 0..self.channels {
            let bias = self.params[self.channels * cin + o];
            let plane = &mut out[o * hw..(o + 1) * hw];
            plane.iter_mut().for_each(|v| *v = bias);
            for i in 0..cin {
                let w = self.params[o * cin + i];
                plane.iter_mut().zip(&x[i * hw..(i + 1) * hw]).for_each(|(d, s)| *d += w * s);
            }
        }
        Ok((Stack::new(self.channels, input.y_t.rows, input.y_t.cols, out)?, LinearCache { input: x, hw }))
    }

    fn backward(&self, cache: &LinearCache, grad_out: &Stack, grad: &mut [f64]) {
        let hw = cache.hw;
        let cin = self.channels + self.cond_channels;
        for o in 0..self.channels {
            let go = &grad_out.data[o * hw..(o + 1) * hw];
            grad[self.channels * cin + o] += go.iter().sum::<f64>();
            for i in 0..cin {
                grad[o * cin + i] += go.iter().zip(&cache.input[i * hw..(i + 1) * hw]).map(|(g, x)| g * x).sum::<f64>();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> DenoiserConfig {
        DenoiserConfig { channels: 2, cond_channels: 2, width: 4, blocks: 2, embed_dim: 4, wrap_rows: false }
    }

    fn inputs() -> (Stack, Stack) {
        let y = Stack::new(2, 5, 6, (0..60).map(|i| libm::sin(i as f64)).collect()).unwrap();
        let c = Stack::new(2, 5, 6, (0..60).map(|i| libm::cos(i as f64 * 0.3)).collect()).unwrap();
        (y, c)
    }

    #[test]
    fn zero_params_give_the_output_bias() {
        let mut net = Denoiser::zeros(cfg()).unwrap();
        let ob = net.layout.conv_out.b;
        net.params_mut()[ob] = 0.7;
        net.params_mut()[ob + 1] = -1.5;
        let (y, c) = inputs();
        let out = net.denoise(&DenoiseInput { y_t: &y, condition: &c, t: 3, k: 2 }).unwrap();
        assert!(out.plane(0).iter().all(|&v| v == 0.7));
        assert!(out.plane(1).iter().all(|&v| v == -1.5));
    }

    #[test]
    fn deterministic_and_conditioned_on_k() {
        let net = Denoiser::init(cfg(), 11).unwrap();
        let (y, c) = inputs();
        let a = net.denoise(&DenoiseInput { y_t: &y, condition: &c, t: 3, k: 2 }).unwrap();
        let b = net.denoise(&DenoiseInput { y_t: &y, condition: &c, t: 3, k: 2 }).unwrap();
        assert_eq!(a, b);
        let other = net.denoise(&DenoiseInput { y_t: &y, condition: &c, t: 3, k: 5 }).unwrap();
        let diff = a.data.iter().zip(&other.data).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(diff > 0.0);
        let bad = Stack::zeros(1, 5, 6);
        assert!(net.denoise(&DenoiseInput { y_t: &bad, condition: &c, t: 3, k: 2 }).is_err());
    }

    #[test]
    fn shifted_helpers_agree() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [0.5, -1.0, 2.0, 3.0];
        for off in [-1isize, 0, 1] {
            let mut d = [0.0; 4];
            axpy_shift(&mut d, &b, 1.0, off);
            let want: f64 = (0..4).map(|c| a[c] * b[(c as isize + off).rem_euclid(4) as usize]).sum();
            assert_eq!(dot_shift(&a, &b, off), want);
            assert_eq!(a.iter().zip(&d).map(|(x, y)| x * y).sum::<f64>(), want);
        }
    }
}
