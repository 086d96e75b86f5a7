//! Named parameters and the building blocks shared by every network:
//! equalized-learning-rate layers and the shift/scale modulation block.

use autograd::{Array, ConvGeom, Float, Gradients, Var};
use indexmap::IndexMap;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Result};

pub const LEAKY_SLOPE: f64 = 0.2;

/// Ordered map from parameter name to value.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet<T: Float = f32> {
    arrays: IndexMap<String, Array<T>>,
}

impl<T: Float> Default for ParamSet<T> {
    fn default() -> Self {
        Self { arrays: IndexMap::new() }
    }
}

impl<T: Float> ParamSet<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Array<T>) {
        self.arrays.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<&Array<T>> {
        self.arrays.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Array<T>> {
        self.arrays.get_mut(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Array<T>)> {
        self.arrays.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Array<T>)> {
        self.arrays.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.arrays.keys()
    }

    pub fn len(&self) -> usize {
        self.arrays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrays.is_empty()
    }

    /// Total scalar count.
    pub fn count(&self) -> usize {
        self.arrays.values().map(Array::len).sum()
    }

    pub fn cast<U: Float>(&self) -> ParamSet<U> {
        ParamSet {
            arrays: self.arrays.iter().map(|(k, v)| (k.clone(), v.cast())).collect(),
        }
    }

    /// Copies of the arrays whose names start with `prefix`.
    pub fn subset(&self, prefix: &str) -> Self {
        Self {
            arrays: self
                .arrays
                .iter()
                .filter(|(k, _)| k.starts_with(prefix))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    pub fn extend(&mut self, other: ParamSet<T>) {
        self.arrays.extend(other.arrays);
    }

    /// Wraps every array in a graph variable; leaves when `trainable`.
    pub fn bind(&self, trainable: bool) -> Bound<T> {
        self.bind_where(|_| trainable)
    }

    /// Leaves for names accepted by `trainable`, constants otherwise.
    pub fn bind_where(&self, trainable: impl Fn(&str) -> bool) -> Bound<T> {
        Bound {
            vars: self
                .arrays
                .iter()
                .map(|(k, v)| {
                    let var = if trainable(k) { Var::leaf(v.clone()) } else { Var::constant(v.clone()) };
                    (k.clone(), var)
                })
                .collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.arrays.values().all(Array::all_finite)
    }
}

/// Parameters wrapped as graph variables for one forward pass.
#[derive(Clone, Debug)]
pub struct Bound<T: Float> {
    vars: IndexMap<String, Var<T>>,
}

impl<T: Float> Bound<T> {
    pub fn get(&self, name: &str) -> Result<&Var<T>> {
        self.vars
            .get(name)
            .ok_or_else(|| domain(format!("missing parameter {name}")))
    }

    pub fn vars(&self) -> impl Iterator<Item = (&String, &Var<T>)> {
        self.vars.iter()
    }

    /// Gradients of the named parameters (zeros where disconnected).
    pub fn gradients(&self, grads: &Gradients<T>) -> ParamSet<T> {
        ParamSet {
            arrays: self
                .vars
                .iter()
                .map(|(k, v)| {
                    let g = grads.get(v).cloned().unwrap_or_else(|| Array::zeros(v.shape()));
                    (k.clone(), g)
                })
                .collect(),
        }
    }

    /// Gradients of the trainable (leaf) parameters accepted by `keep`.
    pub fn gradients_where(&self, grads: &Gradients<T>, keep: impl Fn(&str) -> bool) -> ParamSet<T> {
        let mut all = self.gradients(grads);
        all.arrays.retain(|k, _| keep(k) && self.vars[k].requires_grad());
        all
    }
}

fn normal<T: Float>(shape: &[usize], rng: &mut impl Rng) -> Array<T> {
    let n = autograd::numel(shape);
    let data = (0..n)
        .map(|_| T::from_f64_lossy(rng.sample::<f64, _>(StandardNormal)))
        .collect();
    Array::new(shape, data).expect("shape matches data")
}

/// He factor applied at runtime to standard-normal weights.
pub fn he_scale(fan_in: usize) -> f64 {
    (2.0 / fan_in as f64).sqrt()
}

/// Fully connected layer, weight `[fan_in, fan_out]`.
#[derive(Clone, Debug)]
pub struct EqLinear {
    pub name: String,
    pub fan_in: usize,
    pub fan_out: usize,
    pub scale: f64,
    pub bias: bool,
}

impl EqLinear {
    pub fn new(name: impl Into<String>, fan_in: usize, fan_out: usize) -> Self {
        Self { name: name.into(), fan_in, fan_out, scale: he_scale(fan_in), bias: true }
    }

    pub fn without_bias(name: impl Into<String>, fan_in: usize, fan_out: usize) -> Self {
        Self { bias: false, ..Self::new(name, fan_in, fan_out) }
    }

    pub fn weight_name(&self) -> String {
        format!("{}.w", self.name)
    }

    pub fn bias_name(&self) -> String {
        format!("{}.b", self.name)
    }

    pub fn init<T: Float>(&self, ps: &mut ParamSet<T>, rng: &mut impl Rng) {
        ps.insert(self.weight_name(), normal(&[self.fan_in, self.fan_out], rng));
        if self.bias {
            ps.insert(self.bias_name(), Array::zeros(&[self.fan_out]));
        }
    }

    pub fn forward<T: Float>(&self, p: &Bound<T>, x: &Var<T>) -> Result<Var<T>> {
        if x.shape().len() != 2 || x.shape()[1] != self.fan_in {
            return Err(domain(format!("{}: input {:?}, expected [n, {}]", self.name, x.shape(), self.fan_in)));
        }
        let w = p.get(&self.weight_name())?.scale(self.scale);
        let y = x.matmul(&w)?;
        if !self.bias {
            return Ok(y);
        }
        Ok(y.add(p.get(&self.bias_name())?)?)
    }
}

/// Stride-1 square convolution, weight `[c_out, c_in, k, k]`.
#[derive(Clone, Debug)]
pub struct EqConv {
    pub name: String,
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
    pub scale: f64,
}

impl EqConv {
    pub fn new(name: impl Into<String>, c_in: usize, c_out: usize, kernel: usize) -> Self {
        Self { name: name.into(), c_in, c_out, kernel, scale: he_scale(c_in * kernel * kernel) }
    }

    pub fn init<T: Float>(&self, ps: &mut ParamSet<T>, rng: &mut impl Rng) {
        let k = self.kernel;
        ps.insert(format!("{}.w", self.name), normal(&[self.c_out, self.c_in, k, k], rng));
        ps.insert(format!("{}.b", self.name), Array::zeros(&[1, self.c_out, 1, 1]));
    }

    /// "Same" padding for odd kernels.
    pub fn forward<T: Float>(&self, p: &Bound<T>, x: &Var<T>) -> Result<Var<T>> {
        let s = x.shape();
        if s.len() != 4 || s[1] != self.c_in {
            return Err(domain(format!("{}: input {s:?}, expected [n, {}, h, w]", self.name, self.c_in)));
        }
        let geom = ConvGeom::conv((s[2], s[3]), self.kernel, 1, self.kernel / 2)?;
        let w = p.get(&format!("{}.w", self.name))?.scale(self.scale);
        Ok(x.conv2d(&w, geom)?.add(p.get(&format!("{}.b", self.name))?)?)
    }
}

/// Transposed convolution (kernel 4, stride 2, pad 1) to an explicit
/// output size; weight `[c_in, c_out, 4, 4]`.
#[derive(Clone, Debug)]
pub struct EqDeconv {
    pub name: String,
    pub c_in: usize,
    pub c_out: usize,
    pub output: (usize, usize),
    pub scale: f64,
}

impl EqDeconv {
    pub const KERNEL: usize = 4;

    pub fn new(name: impl Into<String>, c_in: usize, c_out: usize, output: (usize, usize)) -> Self {
        let k = Self::KERNEL;
        Self { name: name.into(), c_in, c_out, output, scale: he_scale(c_in * k * k) }
    }

    pub fn init<T: Float>(&self, ps: &mut ParamSet<T>, rng: &mut impl Rng) {
        let k = Self::KERNEL;
        ps.insert(format!("{}.w", self.name), normal(&[self.c_in, self.c_out, k, k], rng));
        ps.insert(format!("{}.b", self.name), Array::zeros(&[1, self.c_out, 1, 1]));
    }

    pub fn forward<T: Float>(&self, p: &Bound<T>, x: &Var<T>) -> Result<Var<T>> {
        let s = x.shape();
        if s.len() != 4 || s[1] != self.c_in {
            return Err(domain(format!("{}: input {s:?}, expected [n, {}, h, w]", self.name, self.c_in)));
        }
        let geom = ConvGeom::deconv((s[2], s[3]), Self::KERNEL, 2, 1, self.output)?;
        let w = p.get(&format!("{}.w", self.name))?.scale(self.scale);
        Ok(x.conv_transpose2d(&w, geom)?.add(p.get(&format!("{}.b", self.name))?)?)
    }
}

/// Per-channel modulation `α(z)·x + β(z)` with α, β equalized linear maps
/// of the latent code. Starts as the identity: zero weights, α bias 1.
#[derive(Clone, Debug)]
pub struct SsBlock {
    pub alpha: EqLinear,
    pub beta: EqLinear,
    pub channels: usize,
}

impl SsBlock {
    pub fn new(name: &str, z_dim: usize, channels: usize) -> Self {
        Self {
            alpha: EqLinear::new(format!("{name}.alpha"), z_dim, channels),
            beta: EqLinear::new(format!("{name}.beta"), z_dim, channels),
            channels,
        }
    }

    pub fn init<T: Float>(&self, ps: &mut ParamSet<T>) {
        let (z, c) = (self.alpha.fan_in, self.channels);
        ps.insert(self.alpha.weight_name(), Array::zeros(&[z, c]));
        ps.insert(self.alpha.bias_name(), Array::ones(&[c]));
        ps.insert(self.beta.weight_name(), Array::zeros(&[z, c]));
        ps.insert(self.beta.bias_name(), Array::zeros(&[c]));
    }

    /// Number of scalars: two `z → C` maps with biases.
    pub fn param_count(&self) -> usize {
        2 * (self.alpha.fan_in * self.channels + self.channels)
    }

    pub fn forward<T: Float>(&self, p: &Bound<T>, x: &Var<T>, z: &Var<T>) -> Result<Var<T>> {
        let (a, b) = self.coefficients(p, z)?;
        let s = x.shape();
        if s.len() < 2 || s[1] != self.channels {
            return Err(domain(format!(
                "{}: {} channels, block has {}",
                self.alpha.name,
                s.get(1).copied().unwrap_or(0),
                self.channels
            )));
        }
        let mut shape = vec![s[0], self.channels];
        shape.resize(s.len(), 1);
        Ok(x.mul(&a.reshape(&shape)?)?.add(&b.reshape(&shape)?)?)
    }

    /// `(α(z), β(z))`, each `[n, C]`.
    pub fn coefficients<T: Float>(&self, p: &Bound<T>, z: &Var<T>) -> Result<(Var<T>, Var<T>)> {
        Ok((self.alpha.forward(p, z)?, self.beta.forward(p, z)?))
    }
}

pub fn lrelu<T: Float>(x: &Var<T>) -> Var<T> {
    x.leaky_relu(LEAKY_SLOPE)
}
