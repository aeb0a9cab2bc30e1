//! Minimal dense-network machinery with hand-written reverse-mode gradients.
//!
//! Networks expose batched forward/backward over flat row-major buffers; the
//! parameter indexing contract (`collect_params` / `params_apply` /
//! gradient slots in `backward_batch`) is shared by the optimizer, target
//! copies, and checkpointing.

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the pre-activation z.
    #[inline]
    pub fn deriv(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Linear => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            "linear" => Some(Activation::Linear),
            _ => None,
        }
    }
}

/// Common interface for trainable networks.
pub trait Network: Clone + Send + Sync {
    type Cache: Default + Send;

    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn param_count(&self) -> usize;

    /// Forward for a row-major batch; outputs land in the cache.
    fn forward_batch(&self, x: &[f64], batch: usize, cache: &mut Self::Cache);

    fn output<'a>(&self, cache: &'a Self::Cache) -> &'a [f64];

    /// Reverse pass for the cached batch. `dy` is ∂L/∂output; parameter
    /// gradients accumulate into `grads` (indexed like `collect_params`),
    /// input gradients into `dx` when requested.
    fn backward_batch(
        &self,
        cache: &Self::Cache,
        dy: &[f64],
        grads: Option<&mut [f64]>,
        dx: Option<&mut [f64]>,
    );

    fn collect_params(&self, out: &mut Vec<f64>);
    fn params_apply(&mut self, f: &mut dyn FnMut(usize, &mut f64));

    fn forward_single(&self, x: &[f64], cache: &mut Self::Cache) -> Vec<f64> {
        self.forward_batch(x, 1, cache);
        self.output(cache).to_vec()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let c = n / 4 * 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    let mut i = 0;
    while i < c {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
        i += 4;
    }
    while i < n {
        s0 += a[i] * b[i];
        i += 1;
    }
    (s0 + s1) + (s2 + s3)
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += alpha * *xi;
    }
}

/// Fully connected network; parameters laid out as [W1 | b1 | W2 | b2 | …]
/// with W row-major (out × in).
#[derive(Debug, Clone)]
pub struct Mlp {
    pub dims: Vec<usize>,
    pub acts: Vec<Activation>,
    params: Vec<f64>,
    w_off: Vec<usize>,
    b_off: Vec<usize>,
}

#[derive(Debug, Default)]
pub struct MlpCache {
    batch: usize,
    /// Layer inputs: [0] is the batch input, then post-activations.
    xs: Vec<Vec<f64>>,
    /// Pre-activations per layer.
    zs: Vec<Vec<f64>>,
}

impl Mlp {
    pub fn new(dims: Vec<usize>, acts: Vec<Activation>, rng: &mut impl Rng, final_scale: f64) -> Self {
        assert_eq!(acts.len() + 1, dims.len(), "one activation per layer");
        let layers = acts.len();
        let mut params = Vec::new();
        let mut w_off = Vec::new();
        let mut b_off = Vec::new();
        for l in 0..layers {
            let (din, dout) = (dims[l], dims[l + 1]);
            let scale = if l + 1 == layers {
                final_scale
            } else {
                1.0 / (din as f64).sqrt()
            };
            w_off.push(params.len());
            for _ in 0..din * dout {
                params.push(rng.gen_range(-scale..scale));
            }
            b_off.push(params.len());
            for _ in 0..dout {
                params.push(rng.gen_range(-scale..scale));
            }
        }
        Self {
            dims,
            acts,
            params,
            w_off,
            b_off,
        }
    }

    /// Rebuild from stored dimensions, activations and a parameter vector.
    pub fn from_parts(dims: Vec<usize>, acts: Vec<Activation>, params: Vec<f64>) -> Self {
        assert_eq!(acts.len() + 1, dims.len());
        let layers = acts.len();
        let mut w_off = Vec::new();
        let mut b_off = Vec::new();
        let mut count = 0usize;
        for l in 0..layers {
            let (din, dout) = (dims[l], dims[l + 1]);
            w_off.push(count);
            count += din * dout;
            b_off.push(count);
            count += dout;
        }
        assert_eq!(params.len(), count, "parameter vector length mismatch");
        Self {
            dims,
            acts,
            params,
            w_off,
            b_off,
        }
    }

    pub fn layer_count(&self) -> usize {
        self.acts.len()
    }

    pub fn params_slice(&self) -> &[f64] {
        &self.params
    }

    pub fn params_slice_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.params.len());
        self.params.copy_from_slice(values);
    }
}

impl Network for Mlp {
    type Cache = MlpCache;

    fn input_dim(&self) -> usize {
        self.dims[0]
    }

    fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    fn param_count(&self) -> usize {
        self.params.len()
    }

    fn forward_batch(&self, x: &[f64], batch: usize, cache: &mut Self::Cache) {
        let layers = self.layer_count();
        debug_assert_eq!(x.len(), batch * self.dims[0]);
        cache.batch = batch;
        cache.xs.resize_with(layers + 1, Vec::new);
        cache.zs.resize_with(layers, Vec::new);
        cache.xs[0].clear();
        cache.xs[0].extend_from_slice(x);
        for l in 0..layers {
            let (din, dout) = (self.dims[l], self.dims[l + 1]);
            let w = &self.params[self.w_off[l]..self.w_off[l] + din * dout];
            let b = &self.params[self.b_off[l]..self.b_off[l] + dout];
            let act = self.acts[l];
            // split borrows: z and the following x buffer
            let (xs_before, xs_after) = cache.xs.split_at_mut(l + 1);
            let xin = &xs_before[l];
            let z = &mut cache.zs[l];
            z.clear();
            z.resize(batch * dout, 0.0);
            let xout = &mut xs_after[0];
            xout.clear();
            xout.resize(batch * dout, 0.0);
            for bi in 0..batch {
                let xr = &xin[bi * din..(bi + 1) * din];
                let zr = &mut z[bi * dout..(bi + 1) * dout];
                for o in 0..dout {
                    zr[o] = dot(&w[o * din..(o + 1) * din], xr) + b[o];
                }
                let or = &mut xout[bi * dout..(bi + 1) * dout];
                for o in 0..dout {
                    or[o] = act.apply(zr[o]);
                }
            }
        }
    }

    fn output<'a>(&self, cache: &'a Self::Cache) -> &'a [f64] {
        cache.xs.last().unwrap()
    }

    fn backward_batch(
        &self,
        cache: &Self::Cache,
        dy: &[f64],
        mut grads: Option<&mut [f64]>,
        dx: Option<&mut [f64]>,
    ) {
        let layers = self.layer_count();
        let batch = cache.batch;
        debug_assert_eq!(dy.len(), batch * self.output_dim());
        let mut dz: Vec<f64> = dy.to_vec();
        for l in (0..layers).rev() {
            let (din, dout) = (self.dims[l], self.dims[l + 1]);
            let w = &self.params[self.w_off[l]..self.w_off[l] + din * dout];
            let act = self.acts[l];
            let z = &cache.zs[l];
            let xin = &cache.xs[l];
            for (dzi, zi) in dz.iter_mut().zip(z.iter()) {
                *dzi *= act.deriv(*zi);
            }
            let need_dx = l > 0 || dx.is_some();
            let mut dxl = if need_dx { vec![0.0; batch * din] } else { Vec::new() };
            for bi in 0..batch {
                let dzr = &dz[bi * dout..(bi + 1) * dout];
                let xr = &xin[bi * din..(bi + 1) * din];
                for o in 0..dout {
                    let g = dzr[o];
                    if g == 0.0 {
                        continue;
                    }
                    if let Some(gr) = grads.as_deref_mut() {
                        let wg = &mut gr[self.w_off[l] + o * din..self.w_off[l] + (o + 1) * din];
                        axpy(g, xr, wg);
                        gr[self.b_off[l] + o] += g;
                    }
                    if need_dx {
                        let dxr = &mut dxl[bi * din..(bi + 1) * din];
                        axpy(g, &w[o * din..(o + 1) * din], dxr);
                    }
                }
            }
            if l == 0 {
                if let Some(out) = dx {
                    out.copy_from_slice(&dxl);
                }
                break;
            }
            dz = dxl;
        }
    }

    fn collect_params(&self, out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.params);
    }

    fn params_apply(&mut self, f: &mut dyn FnMut(usize, &mut f64)) {
        for (i, p) in self.params.iter_mut().enumerate() {
            f(i, p);
        }
    }
}

/// SGD with classical momentum over any `Network`.
#[derive(Debug, Clone)]
pub struct SgdMomentum {
    pub lr: f64,
    pub momentum: f64,
    velocity: Vec<f64>,
}

impl SgdMomentum {
    pub fn new(lr: f64, momentum: f64, param_count: usize) -> Self {
        Self {
            lr,
            momentum,
            velocity: vec![0.0; param_count],
        }
    }

    /// Descend along `grads`; pass a negative learning step by negating the
    /// gradient beforehand for ascent.
    pub fn step<N: Network>(&mut self, net: &mut N, grads: &[f64]) {
        debug_assert_eq!(grads.len(), self.velocity.len());
        let (m, lr) = (self.momentum, self.lr);
        for (v, g) in self.velocity.iter_mut().zip(grads.iter()) {
            *v = m * *v + g;
        }
        let vel = &self.velocity;
        net.params_apply(&mut |i, w| *w -= lr * vel[i]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fd_check_params(net: &Mlp, x: &[f64], batch: usize, tol: f64) {
        let mut cache = MlpCache::default();
        net.forward_batch(x, batch, &mut cache);
        let out_len = batch * net.output_dim();
        let dy = vec![1.0; out_len];
        let mut grads = vec![0.0; net.param_count()];
        net.backward_batch(&cache, &dy, Some(&mut grads), None);

        let mut p0 = Vec::new();
        net.collect_params(&mut p0);
        let loss = |n: &Mlp| -> f64 {
            let mut c = MlpCache::default();
            n.forward_batch(x, batch, &mut c);
            n.output(&c).iter().sum()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..30 {
            let k = rng.gen_range(0..net.param_count());
            let h = 1e-6 * (1.0 + p0[k].abs());
            let mut np = net.clone();
            let mut pp = p0.clone();
            pp[k] += h;
            np.set_params(&pp);
            let fp = loss(&np);
            pp[k] -= 2.0 * h;
            np.set_params(&pp);
            let fm = loss(&np);
            let fd = (fp - fm) / (2.0 * h);
            let scale = fd.abs().max(grads[k].abs()).max(1e-8);
            assert!(
                (fd - grads[k]).abs() / scale < tol,
                "param {k}: fd {fd} vs grad {}",
                grads[k]
            );
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::new(
            vec![4, 8, 6, 2],
            vec![Activation::Tanh, Activation::Relu, Activation::Linear],
            &mut rng,
            0.3,
        );
        let x: Vec<f64> = (0..3 * 4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        fd_check_params(&net, &x, 3, 1e-5);
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Mlp::new(
            vec![3, 10, 1],
            vec![Activation::Tanh, Activation::Linear],
            &mut rng,
            0.5,
        );
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut cache = MlpCache::default();
        net.forward_batch(&x, 1, &mut cache);
        let mut dx = vec![0.0; 3];
        net.backward_batch(&cache, &[1.0], None, Some(&mut dx));
        for i in 0..3 {
            let h = 1e-6;
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let mut c = MlpCache::default();
            net.forward_batch(&xp, 1, &mut c);
            let fp = net.output(&c)[0];
            net.forward_batch(&xm, 1, &mut c);
            let fm = net.output(&c)[0];
            let fd = (fp - fm) / (2.0 * h);
            assert!((fd - dx[i]).abs() < 1e-6 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn sgd_momentum_two_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = Mlp::new(vec![1, 1], vec![Activation::Linear], &mut rng, 1.0);
        let mut p = Vec::new();
        net.collect_params(&mut p);
        let g = vec![1.0, 0.5];
        let mut opt = SgdMomentum::new(0.1, 0.9, 2);
        opt.step(&mut net, &g);
        opt.step(&mut net, &g);
        let mut p2 = Vec::new();
        net.collect_params(&mut p2);
        // velocity: v1 = g, v2 = 0.9 g + g = 1.9 g; total = lr*(v1+v2) = lr*2.9*g
        assert!((p[0] - p2[0] - 0.1 * 2.9 * 1.0).abs() < 1e-12);
        assert!((p[1] - p2[1] - 0.1 * 2.9 * 0.5).abs() < 1e-12);
    }
}
