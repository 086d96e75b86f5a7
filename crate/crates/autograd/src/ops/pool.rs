//! Index-based and fixed-weight spatial maps: stride-1 max pooling and
//! per-plane linear resampling (used for anti-aliased downsampling).

use std::rc::Rc;

use crate::array::{numel, Array};
use crate::error::{Error, Result};
use crate::scalar::Float;
use crate::var::{Backward, Var};

struct Gather {
    index: Rc<Vec<usize>>,
}

struct Scatter {
    index: Rc<Vec<usize>>,
}

fn gather<T: Float>(x: &[T], index: &[usize], shape: &[usize]) -> Result<Array<T>> {
    Array::new(shape, index.iter().map(|&i| x[i]).collect())
}

fn scatter<T: Float>(g: &[T], index: &[usize], shape: &[usize]) -> Result<Array<T>> {
    let mut out = vec![T::zero(); numel(shape)];
    for (&i, &v) in index.iter().zip(g) {
        out[i] += v;
    }
    Array::new(shape, out)
}

impl<T: Float> Backward<T> for Gather {
    fn backward(&self, x: &[Var<T>], _: &Var<T>, g: &Var<T>) -> Result<Vec<Option<Var<T>>>> {
        Ok(vec![Some(g.scatter_index(Rc::clone(&self.index), x[0].shape())?)])
    }
}

impl<T: Float> Backward<T> for Scatter {
    fn backward(&self, x: &[Var<T>], _: &Var<T>, g: &Var<T>) -> Result<Vec<Option<Var<T>>>> {
        Ok(vec![Some(g.gather_index(Rc::clone(&self.index), x[0].shape())?)])
    }
}

/// Sparse linear map between two spatial grids, applied to every
/// `(batch, channel)` plane independently.
#[derive(Clone, Debug)]
pub struct PlaneMap {
    pub input: (usize, usize),
    pub output: (usize, usize),
    /// `(output offset, input offset, weight)`
    pub taps: Vec<(usize, usize, f64)>,
}

impl PlaneMap {
    /// 3×3 binomial blur (`[1,2,1]ᵀ[1,2,1] / 16`) with edge replication,
    /// sampled at every `stride`-th position starting from 0.
    pub fn binomial_blur(input: (usize, usize), stride: usize) -> Self {
        let (h, w) = input;
        let output = (h.div_ceil(stride), w.div_ceil(stride));
        let k = [1.0, 2.0, 1.0];
        let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
        let mut taps = Vec::with_capacity(output.0 * output.1 * 9);
        for oy in 0..output.0 {
            for ox in 0..output.1 {
                let o = oy * output.1 + ox;
                let start = taps.len();
                for (a, ka) in k.iter().enumerate() {
                    for (b, kb) in k.iter().enumerate() {
                        let iy = clamp((oy * stride) as isize + a as isize - 1, h);
                        let ix = clamp((ox * stride) as isize + b as isize - 1, w);
                        let i = iy * w + ix;
                        let wgt = ka * kb / 16.0;
                        // merge taps landing on the same replicated pixel
                        match taps[start..].iter_mut().find(|t: &&mut (usize, usize, f64)| t.1 == i) {
                            Some(t) => t.2 += wgt,
                            None => taps.push((o, i, wgt)),
                        }
                    }
                }
            }
        }
        Self { input, output, taps }
    }
}

struct ApplyPlaneMap {
    map: Rc<PlaneMap>,
    transposed: bool,
}

fn apply_plane_map<T: Float>(x: &Array<T>, map: &PlaneMap, transposed: bool) -> Result<Array<T>> {
    let (src, dst) = if transposed {
        (map.output, map.input)
    } else {
        (map.input, map.output)
    };
    let shape = x.shape();
    if shape.len() != 4 || (shape[2], shape[3]) != src {
        return Err(Error::InvalidShape {
            op: "plane_map",
            shape: shape.to_vec(),
            reason: format!("expected [n, c, {}, {}]", src.0, src.1),
        });
    }
    let planes = shape[0] * shape[1];
    let (sl, dl) = (src.0 * src.1, dst.0 * dst.1);
    let taps: Vec<(usize, usize, T)> = map
        .taps
        .iter()
        .map(|&(o, i, w)| {
            let w = T::from_f64_lossy(w);
            if transposed { (i, o, w) } else { (o, i, w) }
        })
        .collect();
    let mut out = vec![T::zero(); planes * dl];
    for (s, d) in x.data().chunks_exact(sl).zip(out.chunks_exact_mut(dl)) {
        for &(o, i, w) in &taps {
            d[o] += w * s[i];
        }
    }
    Array::new(&[shape[0], shape[1], dst.0, dst.1], out)
}

impl<T: Float> Backward<T> for ApplyPlaneMap {
    fn backward(&self, _: &[Var<T>], _: &Var<T>, g: &Var<T>) -> Result<Vec<Option<Var<T>>>> {
        Ok(vec![Some(g.plane_map(Rc::clone(&self.map), !self.transposed)?)])
    }
}

impl<T: Float> Var<T> {
    /// `out[i] = self[index[i]]`, reshaped to `shape`.
    pub fn gather_index(&self, index: Rc<Vec<usize>>, shape: &[usize]) -> Result<Var<T>> {
        if index.len() != numel(shape) || index.iter().any(|&i| i >= self.value().len()) {
            return Err(Error::InvalidShape {
                op: "gather",
                shape: shape.to_vec(),
                reason: "index does not match shapes".into(),
            });
        }
        let value = gather(self.value().data(), &index, shape)?;
        Ok(Var::from_op(value, vec![self.clone()], Gather { index }))
    }

    /// Adjoint of `gather_index`: accumulates `self[i]` into `out[index[i]]`.
    pub fn scatter_index(&self, index: Rc<Vec<usize>>, shape: &[usize]) -> Result<Var<T>> {
        if index.len() != self.value().len() || index.iter().any(|&i| i >= numel(shape)) {
            return Err(Error::InvalidShape {
                op: "scatter",
                shape: shape.to_vec(),
                reason: "index does not match shapes".into(),
            });
        }
        let value = scatter(self.value().data(), &index, shape)?;
        Ok(Var::from_op(value, vec![self.clone()], Scatter { index }))
    }

    /// Applies `map` (or its transpose) to every spatial plane of a rank-4 value.
    pub fn plane_map(&self, map: Rc<PlaneMap>, transposed: bool) -> Result<Var<T>> {
        let value = apply_plane_map(self.value(), &map, transposed)?;
        Ok(Var::from_op(
            value,
            vec![self.clone()],
            ApplyPlaneMap { map, transposed },
        ))
    }

    /// Max over each 2×2 window anchored at the output pixel (stride 1);
    /// windows past the bottom/right edge replicate the last row/column, so
    /// the spatial size is unchanged.
    pub fn max_pool2_stride1(&self) -> Result<Var<T>> {
        let shape = self.shape();
        if shape.len() != 4 {
            return Err(Error::InvalidShape {
                op: "max_pool2_stride1",
                shape: shape.to_vec(),
                reason: "expected rank 4".into(),
            });
        }
        let (h, w) = (shape[2], shape[3]);
        let data = self.value().data();
        let mut index = Vec::with_capacity(data.len());
        for plane in 0..shape[0] * shape[1] {
            let base = plane * h * w;
            for y in 0..h {
                let y1 = (y + 1).min(h - 1);
                for x in 0..w {
                    let x1 = (x + 1).min(w - 1);
                    let mut best = base + y * w + x;
                    for cand in [base + y * w + x1, base + y1 * w + x, base + y1 * w + x1] {
                        if data[cand] > data[best] {
                            best = cand;
                        }
                    }
                    index.push(best);
                }
            }
        }
        self.gather_index(Rc::new(index), shape)
    }

    /// Anti-aliased downsampling: stride-1 max pool, binomial blur, then
    /// subsampling by 2. Output spatial size is `ceil(n / 2)`.
    pub fn blur_pool(&self) -> Result<Var<T>> {
        let pooled = self.max_pool2_stride1()?;
        let s = pooled.shape();
        let map = Rc::new(PlaneMap::binomial_blur((s[2], s[3]), 2));
        pooled.plane_map(map, false)
    }
}
