//! Minimal dense network: rectifier hidden layers, identity output, exact
//! reverse-mode gradients, and bias-corrected adaptive-moment updates.

use num_traits::Float;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("input length {got} does not match first layer {expected}")]
    InputDim { expected: usize, got: usize },
    #[error("layer sizes must have at least an input and an output")]
    TooFewLayers,
}

/// One affine layer, weights row-major (out x in).
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<F: Float = f64> {
    pub w: Vec<F>,
    pub b: Vec<F>,
    pub rows: usize,
    pub cols: usize,
}

/// Fully-connected net; every hidden layer uses the rectifier, the output
/// layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<F: Float = f64> {
    pub layers: Vec<Layer<F>>,
}

impl<F: Float> Mlp<F> {
    /// Zero-initialized net with the given layer sizes.
    pub fn zeros(sizes: &[usize]) -> Result<Self, NnError> {
        if sizes.len() < 2 {
            return Err(NnError::TooFewLayers);
        }
        let layers = sizes
            .windows(2)
            .map(|ws| Layer {
                w: vec![F::zero(); ws[0] * ws[1]],
                b: vec![F::zero(); ws[1]],
                rows: ws[1],
                cols: ws[0],
            })
            .collect();
        Ok(Mlp { layers })
    }

    /// Fan-in scaled uniform init; the output layer is scaled down by 0.01
    /// so an initial policy stays close to its feedforward default.
    pub fn init<R: Rng>(sizes: &[usize], rng: &mut R, output_scale: f64) -> Result<Self, NnError>
    where
        F: rand::distributions::uniform::SampleUniform,
    {
        let mut net = Self::zeros(sizes)?;
        let n_layers = net.layers.len();
        for (li, layer) in net.layers.iter_mut().enumerate() {
            let bound = F::one() / F::from(layer.cols).unwrap().sqrt();
            let scale = if li + 1 == n_layers {
                F::from(output_scale).unwrap()
            } else {
                F::one()
            };
            for w in layer.w.iter_mut() {
                *w = rng.gen_range(-bound..bound) * scale;
            }
        }
        Ok(net)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().rows
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn flatten(&self) -> Vec<F> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.w);
            out.extend_from_slice(&l.b);
        }
        out
    }

    pub fn set_from_flat(&mut self, flat: &[F]) {
        let mut i = 0;
        for l in self.layers.iter_mut() {
            let nw = l.w.len();
            l.w.copy_from_slice(&flat[i..i + nw]);
            i += nw;
            let nb = l.b.len();
            l.b.copy_from_slice(&flat[i..i + nb]);
            i += nb;
        }
        debug_assert_eq!(i, flat.len());
    }

    /// Forward pass returning per-layer post-activations (index 0 = input).
    fn forward_cached(&self, input: &[F]) -> Result<Vec<Vec<F>>, NnError> {
        if input.len() != self.input_dim() {
            return Err(NnError::InputDim {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let mut acts: Vec<Vec<F>> = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.to_vec());
        for (li, l) in self.layers.iter().enumerate() {
            let x = &acts[li];
            let mut y = vec![F::zero(); l.rows];
            for r in 0..l.rows {
                let mut s = l.b[r];
                let row = &l.w[r * l.cols..(r + 1) * l.cols];
                for c in 0..l.cols {
                    s = s + row[c] * x[c];
                }
                // rectifier on hidden layers only
                if li + 1 < self.layers.len() && s < F::zero() {
                    s = F::zero();
                }
                y[r] = s;
            }
            acts.push(y);
        }
        Ok(acts)
    }

    pub fn forward(&self, input: &[F]) -> Result<Vec<F>, NnError> {
        Ok(self.forward_cached(input)?.pop().unwrap())
    }

    /// Exact gradients of `output . upstream_grad` with respect to every
    /// parameter; returns a same-shaped gradient net.
    pub fn gradients(&self, input: &[F], upstream_grad: &[F]) -> Result<Mlp<F>, NnError> {
        let acts = self.forward_cached(input)?;
        let mut grads = Mlp {
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    w: vec![F::zero(); l.w.len()],
                    b: vec![F::zero(); l.b.len()],
                    rows: l.rows,
                    cols: l.cols,
                })
                .collect(),
        };
        self.accumulate_gradients(&acts, upstream_grad, &mut grads);
        Ok(grads)
    }

    /// Backward pass over cached activations, adding into `grads`.
    fn accumulate_gradients(&self, acts: &[Vec<F>], upstream: &[F], grads: &mut Mlp<F>) {
        let mut delta: Vec<F> = upstream.to_vec();
        for li in (0..self.layers.len()).rev() {
            let l = &self.layers[li];
            let x = &acts[li];
            let y = &acts[li + 1];
            // rectifier gate (hidden layers only); y==0 means gated off
            if li + 1 < self.layers.len() {
                for r in 0..l.rows {
                    if y[r] <= F::zero() {
                        delta[r] = F::zero();
                    }
                }
            }
            let gl = &mut grads.layers[li];
            for r in 0..l.rows {
                gl.b[r] = gl.b[r] + delta[r];
                let grow = &mut gl.w[r * l.cols..(r + 1) * l.cols];
                for c in 0..l.cols {
                    grow[c] = grow[c] + delta[r] * x[c];
                }
            }
            if li > 0 {
                let mut next = vec![F::zero(); l.cols];
                for r in 0..l.rows {
                    let row = &l.w[r * l.cols..(r + 1) * l.cols];
                    for c in 0..l.cols {
                        next[c] = next[c] + delta[r] * row[c];
                    }
                }
                delta = next;
            }
        }
    }

    /// Forward plus gradient accumulation in one call, for batched updates.
    pub fn forward_and_accumulate(
        &self,
        input: &[F],
        upstream: &[F],
        grads: &mut Mlp<F>,
    ) -> Result<Vec<F>, NnError> {
        let acts = self.forward_cached(input)?;
        self.accumulate_gradients(&acts, upstream, grads);
        Ok(acts.last().unwrap().clone())
    }

    pub fn scale(&mut self, factor: F) {
        for l in self.layers.iter_mut() {
            for w in l.w.iter_mut() {
                *w = *w * factor;
            }
            for b in l.b.iter_mut() {
                *b = *b * factor;
            }
        }
    }
}

/// Adaptive-moment optimizer state over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<F: Float = f64> {
    pub m: Vec<F>,
    pub v: Vec<F>,
    pub step: u64,
    pub beta1: F,
    pub beta2: F,
    pub eps: F,
}

impl<F: Float> AdamState<F> {
    pub fn new(param_count: usize) -> Self {
        AdamState {
            m: vec![F::zero(); param_count],
            v: vec![F::zero(); param_count],
            step: 0,
            beta1: F::from(0.9).unwrap(),
            beta2: F::from(0.999).unwrap(),
            eps: F::from(1e-8).unwrap(),
        }
    }
}

/// Standard bias-corrected update; `grads` is the gradient of a loss to be
/// minimized.
pub fn adam_update<F: Float>(params: &mut [F], grads: &[F], st: &mut AdamState<F>, lr: F) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), st.m.len());
    st.step += 1;
    let t = F::from(st.step).unwrap();
    let bc1 = F::one() - st.beta1.powf(t);
    let bc2 = F::one() - st.beta2.powf(t);
    for i in 0..params.len() {
        st.m[i] = st.beta1 * st.m[i] + (F::one() - st.beta1) * grads[i];
        st.v[i] = st.beta2 * st.v[i] + (F::one() - st.beta2) * grads[i] * grads[i];
        let mhat = st.m[i] / bc1;
        let vhat = st.v[i] / bc2;
        params[i] = params[i] - lr * mhat / (vhat.sqrt() + st.eps);
    }
}

/// Diagonal Gaussian over actions; the mean comes from a net, the log
/// standard deviations are free trained parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianHead<F: Float = f64> {
    pub log_std: Vec<F>,
}

impl<F: Float> GaussianHead<F> {
    pub fn new(dim: usize, init_std: F) -> Self {
        GaussianHead {
            log_std: vec![init_std.ln(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn log_prob(&self, mean: &[F], action: &[F]) -> F {
        debug_assert_eq!(mean.len(), self.log_std.len());
        debug_assert_eq!(action.len(), self.log_std.len());
        let half = F::from(0.5).unwrap();
        let ln_two_pi = F::from(std::f64::consts::TAU).unwrap().ln();
        let mut lp = F::zero();
        for i in 0..mean.len() {
            let std = self.log_std[i].exp();
            let z = (action[i] - mean[i]) / std;
            lp = lp - half * z * z - self.log_std[i] - half * ln_two_pi;
        }
        lp
    }

    pub fn sample<R: Rng>(&self, mean: &[F], rng: &mut R) -> Vec<F>
    where
        rand_distr::StandardNormal: rand_distr::Distribution<F>,
    {
        mean.iter()
            .zip(self.log_std.iter())
            .map(|(&m, &ls)| {
                let z: F = rng.sample(rand_distr::StandardNormal);
                m + ls.exp() * z
            })
            .collect()
    }
}
