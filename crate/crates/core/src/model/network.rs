use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::FeatureTensor;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trunk {
    /// Two 2×2 valid convolutions with ReLU.
    Conv { filters: usize },
    /// Flattened input followed by one fully connected ReLU layer.
    Dense { units: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Architecture {
    /// (height, width, channels) of the input.
    pub input: (usize, usize, usize),
    pub actions: usize,
    pub trunk: Trunk,
    /// Units in the hidden layer of each head.
    pub hidden: usize,
}

impl Architecture {
    pub fn conv(input: (usize, usize, usize), actions: usize) -> Self {
        Architecture {
            input,
            actions,
            trunk: Trunk::Conv { filters: 32 },
            hidden: 128,
        }
    }

    pub fn dense(
        input: (usize, usize, usize),
        actions: usize,
        units: usize,
        hidden: usize,
    ) -> Self {
        Architecture {
            input,
            actions,
            trunk: Trunk::Dense { units },
            hidden,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (h, w, c) = self.input;
        if h == 0 || w == 0 || c == 0 || self.actions == 0 || self.hidden == 0 {
            return Err(Error::config("architecture dimensions must be positive"));
        }
        match self.trunk {
            Trunk::Conv { filters } if filters == 0 || h < 3 || w < 3 => Err(Error::config(
                "conv trunk needs filters > 0 and input of at least 3×3",
            )),
            Trunk::Dense { units: 0 } => Err(Error::config("dense trunk needs units > 0")),
            _ => Ok(()),
        }
    }

    pub fn input_len(&self) -> usize {
        self.input.0 * self.input.1 * self.input.2
    }

    pub fn num_params(&self) -> usize {
        Layout::new(self).total
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct DenseLayer {
    w: usize,
    b: usize,
    inp: usize,
    out: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct ConvLayer {
    w: usize,
    b: usize,
    /// Input height, width and channels.
    h: usize,
    wd: usize,
    cin: usize,
    cout: usize,
}

impl ConvLayer {
    fn out_len(&self) -> usize {
        (self.h - 1) * (self.wd - 1) * self.cout
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum TrunkLayout {
    Conv(ConvLayer, ConvLayer),
    Dense(DenseLayer),
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Layout {
    trunk: TrunkLayout,
    p1: DenseLayer,
    p2: DenseLayer,
    h1: DenseLayer,
    h2: DenseLayer,
    total: usize,
}

impl Layout {
    fn new(arch: &Architecture) -> Layout {
        let mut off = 0;
        let mut dense = |inp: usize, out: usize| {
            let l = DenseLayer {
                w: off,
                b: off + inp * out,
                inp,
                out,
            };
            off += inp * out + out;
            l
        };
        let (h, w, c) = arch.input;
        let (trunk, z) = match arch.trunk {
            Trunk::Dense { units } => (TrunkLayout::Dense(dense(h * w * c, units)), units),
            Trunk::Conv { filters } => {
                // Convs are laid out through the same offset counter.
                let c1 = dense(4 * c, filters);
                let c2 = dense(4 * filters, filters);
                let conv = |l: DenseLayer, h, wd, cin| ConvLayer {
                    w: l.w,
                    b: l.b,
                    h,
                    wd,
                    cin,
                    cout: filters,
                };
                let a = conv(c1, h, w, c);
                let b = conv(c2, h - 1, w - 1, filters);
                (TrunkLayout::Conv(a, b), b.out_len())
            }
        };
        let p1 = dense(z, arch.hidden);
        let p2 = dense(arch.hidden, arch.actions);
        let h1 = dense(z, arch.hidden);
        let h2 = dense(arch.hidden, 1);
        Layout {
            trunk,
            p1,
            p2,
            h1,
            h2,
            total: off,
        }
    }
}

fn dense_forward(p: &[f64], l: DenseLayer, x: &[f64]) -> Vec<f64> {
    (0..l.out)
        .map(|o| {
            let row = &p[l.w + o * l.inp..l.w + (o + 1) * l.inp];
            p[l.b + o] + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>()
        })
        .collect()
}

fn dense_backward(
    p: &[f64],
    l: DenseLayer,
    x: &[f64],
    dy: &[f64],
    grad: &mut [f64],
    dx: Option<&mut [f64]>,
) {
    for o in 0..l.out {
        let d = dy[o];
        if d == 0.0 {
            continue;
        }
        grad[l.b + o] += d;
        let g = &mut grad[l.w + o * l.inp..l.w + (o + 1) * l.inp];
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi += d * xi;
        }
    }
    if let Some(dx) = dx {
        for o in 0..l.out {
            let d = dy[o];
            if d == 0.0 {
                continue;
            }
            let row = &p[l.w + o * l.inp..l.w + (o + 1) * l.inp];
            for (dxi, w) in dx.iter_mut().zip(row) {
                *dxi += d * w;
            }
        }
    }
}

#[inline]
fn conv_w(l: ConvLayer, kr: usize, kc: usize, ci: usize, f: usize) -> usize {
    l.w + (((kr * 2 + kc) * l.cin + ci) * l.cout + f)
}

fn conv_forward(p: &[f64], l: ConvLayer, x: &[f64]) -> Vec<f64> {
    let (oh, ow) = (l.h - 1, l.wd - 1);
    let mut y = vec![0.0; oh * ow * l.cout];
    for r in 0..oh {
        for c in 0..ow {
            let out = &mut y[(r * ow + c) * l.cout..(r * ow + c + 1) * l.cout];
            out.copy_from_slice(&p[l.b..l.b + l.cout]);
            for kr in 0..2 {
                for kc in 0..2 {
                    let xin = &x[((r + kr) * l.wd + c + kc) * l.cin
                        ..((r + kr) * l.wd + c + kc + 1) * l.cin];
                    for (ci, &xv) in xin.iter().enumerate() {
                        if xv == 0.0 {
                            continue;
                        }
                        let w0 = conv_w(l, kr, kc, ci, 0);
                        for (o, w) in out.iter_mut().zip(&p[w0..w0 + l.cout]) {
                            *o += xv * w;
                        }
                    }
                }
            }
        }
    }
    y
}

fn conv_backward(
    p: &[f64],
    l: ConvLayer,
    x: &[f64],
    dy: &[f64],
    grad: &mut [f64],
    mut dx: Option<&mut [f64]>,
) {
    let (oh, ow) = (l.h - 1, l.wd - 1);
    for r in 0..oh {
        for c in 0..ow {
            let d = &dy[(r * ow + c) * l.cout..(r * ow + c + 1) * l.cout];
            for (f, &df) in d.iter().enumerate() {
                grad[l.b + f] += df;
            }
            for kr in 0..2 {
                for kc in 0..2 {
                    let base = ((r + kr) * l.wd + c + kc) * l.cin;
                    for ci in 0..l.cin {
                        let xv = x[base + ci];
                        let w0 = conv_w(l, kr, kc, ci, 0);
                        let mut acc = 0.0;
                        for f in 0..l.cout {
                            grad[w0 + f] += xv * d[f];
                            acc += p[w0 + f] * d[f];
                        }
                        if let Some(dx) = dx.as_deref_mut() {
                            dx[base + ci] += acc;
                        }
                    }
                }
            }
        }
    }
}

fn relu(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Zeroes `dy` where the ReLU output `y` is not positive.
fn relu_backward(y: &[f64], dy: &mut [f64]) {
    for (d, &y) in dy.iter_mut().zip(y) {
        if y <= 0.0 {
            *d = 0.0;
        }
    }
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

/// Network outputs for one state.
#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    pub log_probs: Vec<f64>,
    /// Raw heuristic; callers clip at use.
    pub h: f64,
}

/// Intermediate activations kept for backpropagation.
#[derive(Clone, Debug)]
pub(crate) struct Cache {
    t1: Vec<f64>,
    t2: Vec<f64>,
    a1: Vec<f64>,
    a2: Vec<f64>,
    pub(crate) out: Output,
}

/// Two-headed policy/heuristic network with a flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    arch: Architecture,
    layout: Layout,
    pub params: Vec<f64>,
}

impl Network {
    pub fn zeros(arch: Architecture) -> Result<Network> {
        arch.validate()?;
        let layout = Layout::new(&arch);
        Ok(Network {
            arch,
            layout,
            params: vec![0.0; layout.total],
        })
    }

    /// Weights uniform in ±1/√fan_in, biases zero.
    pub fn init(arch: Architecture, seed: u64) -> Result<Network> {
        let mut net = Self::zeros(arch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = net.layout;
        let mut fill = |p: &mut [f64], w: usize, n: usize, fan_in: usize| {
            let a = 1.0 / (fan_in as f64).sqrt();
            for x in &mut p[w..w + n] {
                *x = rng.gen_range(-a..a);
            }
        };
        match l.trunk {
            TrunkLayout::Dense(d) => fill(&mut net.params, d.w, d.inp * d.out, d.inp),
            TrunkLayout::Conv(a, b) => {
                fill(&mut net.params, a.w, 4 * a.cin * a.cout, 4 * a.cin);
                fill(&mut net.params, b.w, 4 * b.cin * b.cout, 4 * b.cin);
            }
        }
        for d in [l.p1, l.p2, l.h1, l.h2] {
            fill(&mut net.params, d.w, d.inp * d.out, d.inp);
        }
        Ok(net)
    }

    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Result<Network> {
        let mut net = Self::zeros(arch)?;
        if params.len() != net.params.len() {
            return Err(Error::ShapeMismatch {
                expected: vec![net.params.len()],
                actual: vec![params.len()],
            });
        }
        net.params = params;
        Ok(net)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn check_shape(&self, x: &FeatureTensor) -> Result<()> {
        if x.shape() != self.arch.input || x.data.len() != self.arch.input_len() {
            let (h, w, c) = self.arch.input;
            return Err(Error::ShapeMismatch {
                expected: vec![h, w, c],
                actual: vec![x.height, x.width, x.channels],
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &FeatureTensor) -> Result<Output> {
        Ok(self.forward_cached(x)?.out)
    }

    pub(crate) fn forward_cached(&self, x: &FeatureTensor) -> Result<Cache> {
        self.check_shape(x)?;
        let p = &self.params;
        let l = &self.layout;
        let (t1, t2) = match l.trunk {
            TrunkLayout::Dense(d) => {
                let mut t1 = dense_forward(p, d, &x.data);
                relu(&mut t1);
                (t1, Vec::new())
            }
            TrunkLayout::Conv(a, b) => {
                let mut t1 = conv_forward(p, a, &x.data);
                relu(&mut t1);
                let mut t2 = conv_forward(p, b, &t1);
                relu(&mut t2);
                (t1, t2)
            }
        };
        let z = if t2.is_empty() { &t1 } else { &t2 };
        let mut a1 = dense_forward(p, l.p1, z);
        relu(&mut a1);
        let logits = dense_forward(p, l.p2, &a1);
        let mut a2 = dense_forward(p, l.h1, z);
        relu(&mut a2);
        let h = dense_forward(p, l.h2, &a2)[0];
        Ok(Cache {
            out: Output {
                log_probs: log_softmax(&logits),
                h,
            },
            t1,
            t2,
            a1,
            a2,
        })
    }

    /// Adds to `grad` the gradient given upstream derivatives with respect
    /// to the policy logits and the raw heuristic output.
    pub(crate) fn backward(
        &self,
        x: &FeatureTensor,
        cache: &Cache,
        dlogits: &[f64],
        dh: f64,
        grad: &mut [f64],
    ) {
        let p = &self.params;
        let l = &self.layout;
        let z = if cache.t2.is_empty() {
            &cache.t1
        } else {
            &cache.t2
        };
        let mut dz = vec![0.0; z.len()];
        if dlogits.iter().any(|&d| d != 0.0) {
            let mut da1 = vec![0.0; cache.a1.len()];
            dense_backward(p, l.p2, &cache.a1, dlogits, grad, Some(&mut da1));
            relu_backward(&cache.a1, &mut da1);
            dense_backward(p, l.p1, z, &da1, grad, Some(&mut dz));
        }
        if dh != 0.0 {
            let mut da2 = vec![0.0; cache.a2.len()];
            dense_backward(p, l.h2, &cache.a2, &[dh], grad, Some(&mut da2));
            relu_backward(&cache.a2, &mut da2);
            dense_backward(p, l.h1, z, &da2, grad, Some(&mut dz));
        }
        if dz.iter().all(|&d| d == 0.0) {
            return;
        }
        match l.trunk {
            TrunkLayout::Dense(d) => {
                relu_backward(&cache.t1, &mut dz);
                dense_backward(p, d, &x.data, &dz, grad, None);
            }
            TrunkLayout::Conv(a, b) => {
                relu_backward(&cache.t2, &mut dz);
                let mut dt1 = vec![0.0; cache.t1.len()];
                conv_backward(p, b, &cache.t1, &dz, grad, Some(&mut dt1));
                relu_backward(&cache.t1, &mut dt1);
                conv_backward(p, a, &x.data, &dt1, grad, None);
            }
        }
    }

    /// Parameter index ranges of the policy head, heuristic head and trunk.
    pub fn head_ranges(
        &self,
    ) -> (
        std::ops::Range<usize>,
        std::ops::Range<usize>,
        std::ops::Range<usize>,
    ) {
        let l = &self.layout;
        let trunk_end = l.p1.w;
        (l.p1.w..l.h1.w, l.h1.w..l.total, 0..trunk_end)
    }
}
