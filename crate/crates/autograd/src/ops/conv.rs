//! Strided 2-D convolution, its transpose, and the weight-gradient
//! contraction. The three are mutually adjoint, so each one's derivative is
//! expressed through the others and gradients of gradients stay available.
//!
//! All three share one geometry relating a *fine* grid to a *coarse* grid:
//! `fine = coarse * stride - pad + tap` for `tap in 0..kernel`, with
//! out-of-range fine positions treated as zero.

use crate::array::Array;
use crate::error::{Error, Result};
use crate::scalar::Float;
use crate::var::{Backward, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeom {
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub fine: (usize, usize),
    pub coarse: (usize, usize),
}

impl ConvGeom {
    /// Geometry of an ordinary convolution over an `input` grid.
    pub fn conv(input: (usize, usize), kernel: usize, stride: usize, pad: usize) -> Result<Self> {
        let out = |n: usize| -> Option<usize> {
            (n + 2 * pad).checked_sub(kernel).map(|v| v / stride + 1)
        };
        match (out(input.0), out(input.1)) {
            (Some(h), Some(w)) if stride > 0 => Ok(Self {
                kernel,
                stride,
                pad,
                fine: input,
                coarse: (h, w),
            }),
            _ => Err(Error::InvalidShape {
                op: "conv2d",
                shape: vec![input.0, input.1],
                reason: format!("kernel {kernel} stride {stride} pad {pad} does not fit"),
            }),
        }
    }

    /// Geometry of a transposed convolution from `input` (coarse) to an
    /// explicit `output` (fine) size; fine positions past `output` are cropped.
    pub fn deconv(
        input: (usize, usize),
        kernel: usize,
        stride: usize,
        pad: usize,
        output: (usize, usize),
    ) -> Result<Self> {
        if stride == 0 || kernel == 0 {
            return Err(Error::InvalidShape {
                op: "conv_transpose2d",
                shape: vec![input.0, input.1],
                reason: "stride and kernel must be positive".into(),
            });
        }
        Ok(Self {
            kernel,
            stride,
            pad,
            fine: output,
            coarse: input,
        })
    }

    fn coarse_len(&self) -> usize {
        self.coarse.0 * self.coarse.1
    }

    /// Fine coordinate for a coarse coordinate and tap, if inside the grid.
    #[inline]
    fn fine_at(&self, coarse: usize, tap: usize, limit: usize) -> Option<usize> {
        (coarse * self.stride + tap)
            .checked_sub(self.pad)
            .filter(|&f| f < limit)
    }
}

/// `[n, c, fine] -> [c*k*k, n*coarse]`
fn im2col<T: Float>(x: &[T], n: usize, c: usize, g: &ConvGeom) -> Vec<T> {
    let k = g.kernel;
    let (fh, fw) = g.fine;
    let (ch, cw) = g.coarse;
    let p = g.coarse_len();
    let cols_w = n * p;
    let mut cols = vec![T::zero(); c * k * k * cols_w];
    for ci in 0..c {
        for kh in 0..k {
            for kw in 0..k {
                let row = (ci * k + kh) * k + kw;
                let dst_row = &mut cols[row * cols_w..(row + 1) * cols_w];
                for b in 0..n {
                    let src = &x[(b * c + ci) * fh * fw..(b * c + ci + 1) * fh * fw];
                    let dst = &mut dst_row[b * p..(b + 1) * p];
                    for oy in 0..ch {
                        let Some(iy) = g.fine_at(oy, kh, fh) else { continue };
                        for ox in 0..cw {
                            if let Some(ix) = g.fine_at(ox, kw, fw) {
                                dst[oy * cw + ox] = src[iy * fw + ix];
                            }
                        }
                    }
                }
            }
        }
    }
    cols
}

/// Adjoint of `im2col`: `[c*k*k, n*coarse] -> [n, c, fine]` with accumulation.
fn col2im<T: Float>(cols: &[T], n: usize, c: usize, g: &ConvGeom) -> Vec<T> {
    let k = g.kernel;
    let (fh, fw) = g.fine;
    let (ch, cw) = g.coarse;
    let p = g.coarse_len();
    let cols_w = n * p;
    let mut x = vec![T::zero(); n * c * fh * fw];
    for ci in 0..c {
        for kh in 0..k {
            for kw in 0..k {
                let row = (ci * k + kh) * k + kw;
                let src_row = &cols[row * cols_w..(row + 1) * cols_w];
                for b in 0..n {
                    let dst = &mut x[(b * c + ci) * fh * fw..(b * c + ci + 1) * fh * fw];
                    let src = &src_row[b * p..(b + 1) * p];
                    for oy in 0..ch {
                        let Some(iy) = g.fine_at(oy, kh, fh) else { continue };
                        for ox in 0..cw {
                            if let Some(ix) = g.fine_at(ox, kw, fw) {
                                dst[iy * fw + ix] += src[oy * cw + ox];
                            }
                        }
                    }
                }
            }
        }
    }
    x
}

/// `[n, c, p] -> [c, n*p]`
fn batch_to_channel_major<T: Float>(x: &[T], n: usize, c: usize, p: usize) -> Vec<T> {
    let mut out = vec![T::zero(); x.len()];
    for b in 0..n {
        for ci in 0..c {
            out[ci * n * p + b * p..ci * n * p + (b + 1) * p]
                .copy_from_slice(&x[(b * c + ci) * p..(b * c + ci + 1) * p]);
        }
    }
    out
}

/// `[c, n*p] -> [n, c, p]`
fn channel_to_batch_major<T: Float>(x: &[T], n: usize, c: usize, p: usize) -> Vec<T> {
    let mut out = vec![T::zero(); x.len()];
    for b in 0..n {
        for ci in 0..c {
            out[(b * c + ci) * p..(b * c + ci + 1) * p]
                .copy_from_slice(&x[ci * n * p + b * p..ci * n * p + (b + 1) * p]);
        }
    }
    out
}

fn expect_rank4(op: &'static str, shape: &[usize]) -> Result<(usize, usize, usize, usize)> {
    match shape {
        &[n, c, h, w] => Ok((n, c, h, w)),
        _ => Err(Error::InvalidShape {
            op,
            shape: shape.to_vec(),
            reason: "expected rank 4".into(),
        }),
    }
}

fn check_weight(op: &'static str, w: &[usize], coarse_c: Option<usize>, fine_c: Option<usize>, g: &ConvGeom) -> Result<(usize, usize)> {
    let ok = w.len() == 4
        && w[2] == g.kernel
        && w[3] == g.kernel
        && coarse_c.is_none_or(|c| c == w[0])
        && fine_c.is_none_or(|c| c == w[1]);
    if !ok {
        return Err(Error::InvalidShape {
            op,
            shape: w.to_vec(),
            reason: format!(
                "weight must be [coarse_ch={coarse_c:?}, fine_ch={fine_c:?}, {k}, {k}]",
                k = g.kernel
            ),
        });
    }
    Ok((w[0], w[1]))
}

fn check_grid(op: &'static str, shape: &[usize], want: (usize, usize)) -> Result<()> {
    if (shape[2], shape[3]) != want {
        return Err(Error::ShapeMismatch {
            op,
            lhs: shape.to_vec(),
            rhs: vec![want.0, want.1],
        });
    }
    Ok(())
}

fn conv_forward<T: Float>(x: &Array<T>, w: &Array<T>, g: &ConvGeom) -> Result<Array<T>> {
    let (n, cf, _, _) = expect_rank4("conv2d", x.shape())?;
    check_grid("conv2d", x.shape(), g.fine)?;
    let (co, _) = check_weight("conv2d", w.shape(), None, Some(cf), g)?;
    let kk = cf * g.kernel * g.kernel;
    let p = g.coarse_len();
    let cols = im2col(x.data(), n, cf, g);
    let mut out = vec![T::zero(); co * n * p];
    T::gemm(co, kk, n * p, w.data(), false, &cols, false, &mut out, false);
    Array::new(
        &[n, co, g.coarse.0, g.coarse.1],
        channel_to_batch_major(&out, n, co, p),
    )
}

fn conv_transpose_forward<T: Float>(x: &Array<T>, w: &Array<T>, g: &ConvGeom) -> Result<Array<T>> {
    let (n, co, _, _) = expect_rank4("conv_transpose2d", x.shape())?;
    check_grid("conv_transpose2d", x.shape(), g.coarse)?;
    let (_, cf) = check_weight("conv_transpose2d", w.shape(), Some(co), None, g)?;
    let kk = cf * g.kernel * g.kernel;
    let p = g.coarse_len();
    let xc = batch_to_channel_major(x.data(), n, co, p);
    let mut cols = vec![T::zero(); kk * n * p];
    T::gemm(kk, co, n * p, w.data(), true, &xc, false, &mut cols, false);
    Array::new(&[n, cf, g.fine.0, g.fine.1], col2im(&cols, n, cf, g))
}

fn conv_weight_forward<T: Float>(fine: &Array<T>, coarse: &Array<T>, g: &ConvGeom) -> Result<Array<T>> {
    let (n, cf, _, _) = expect_rank4("conv2d_weight", fine.shape())?;
    let (n2, co, _, _) = expect_rank4("conv2d_weight", coarse.shape())?;
    check_grid("conv2d_weight", fine.shape(), g.fine)?;
    check_grid("conv2d_weight", coarse.shape(), g.coarse)?;
    if n != n2 {
        return Err(Error::ShapeMismatch {
            op: "conv2d_weight",
            lhs: fine.shape().to_vec(),
            rhs: coarse.shape().to_vec(),
        });
    }
    let kk = cf * g.kernel * g.kernel;
    let p = g.coarse_len();
    let cols = im2col(fine.data(), n, cf, g);
    let gc = batch_to_channel_major(coarse.data(), n, co, p);
    let mut out = vec![T::zero(); co * kk];
    T::gemm(co, n * p, kk, &gc, false, &cols, true, &mut out, false);
    Array::new(&[co, cf, g.kernel, g.kernel], out)
}

struct Conv(ConvGeom);
struct ConvTranspose(ConvGeom);
struct ConvWeight(ConvGeom);

impl<T: Float> Backward<T> for Conv {
    fn backward(&self, x: &[Var<T>], _: &Var<T>, g: &Var<T>) -> Result<Vec<Option<Var<T>>>> {
        let (input, weight) = (&x[0], &x[1]);
        let gi = input
            .requires_grad()
            .then(|| g.conv_transpose2d(weight, self.0))
            .transpose()?;
        let gw = weight
            .requires_grad()
            .then(|| input.conv2d_weight(g, self.0))
            .transpose()?;
        Ok(vec![gi, gw])
    }
}

impl<T: Float> Backward<T> for ConvTranspose {
    fn backward(&self, x: &[Var<T>], _: &Var<T>, g: &Var<T>) -> Result<Vec<Option<Var<T>>>> {
        let (input, weight) = (&x[0], &x[1]);
        let gi = input
            .requires_grad()
            .then(|| g.conv2d(weight, self.0))
            .transpose()?;
        let gw = weight
            .requires_grad()
            .then(|| g.conv2d_weight(input, self.0))
            .transpose()?;
        Ok(vec![gi, gw])
    }
}

impl<T: Float> Backward<T> for ConvWeight {
    fn backward(&self, x: &[Var<T>], _: &Var<T>, g: &Var<T>) -> Result<Vec<Option<Var<T>>>> {
        let (fine, coarse) = (&x[0], &x[1]);
        let gf = fine
            .requires_grad()
            .then(|| coarse.conv_transpose2d(g, self.0))
            .transpose()?;
        let gc = coarse
            .requires_grad()
            .then(|| fine.conv2d(g, self.0))
            .transpose()?;
        Ok(vec![gf, gc])
    }
}

impl<T: Float> Var<T> {
    /// Convolution of `[n, c_in, H, W]` with weight `[c_out, c_in, k, k]`.
    pub fn conv2d(&self, weight: &Var<T>, geom: ConvGeom) -> Result<Var<T>> {
        let value = conv_forward(self.value(), weight.value(), &geom)?;
        Ok(Var::from_op(value, vec![self.clone(), weight.clone()], Conv(geom)))
    }

    /// Transposed convolution of `[n, c_in, h, w]` with weight
    /// `[c_in, c_out, k, k]`, producing the geometry's fine grid.
    pub fn conv_transpose2d(&self, weight: &Var<T>, geom: ConvGeom) -> Result<Var<T>> {
        let value = conv_transpose_forward(self.value(), weight.value(), &geom)?;
        Ok(Var::from_op(
            value,
            vec![self.clone(), weight.clone()],
            ConvTranspose(geom),
        ))
    }

    /// Weight-shaped contraction of a fine-grid value with a coarse-grid value.
    pub fn conv2d_weight(&self, coarse: &Var<T>, geom: ConvGeom) -> Result<Var<T>> {
        let value = conv_weight_forward(self.value(), coarse.value(), &geom)?;
        Ok(Var::from_op(
            value,
            vec![self.clone(), coarse.clone()],
            ConvWeight(geom),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_conv(x: &Array<f64>, w: &Array<f64>, g: &ConvGeom) -> Vec<f64> {
        let s = x.shape();
        let (n, cf, fh, fw) = (s[0], s[1], s[2], s[3]);
        let co = w.shape()[0];
        let k = g.kernel;
        let (ch, cw) = g.coarse;
        let mut out = vec![0.0; n * co * ch * cw];
        for b in 0..n {
            for o in 0..co {
                for oy in 0..ch {
                    for ox in 0..cw {
                        let mut acc = 0.0;
                        for i in 0..cf {
                            for kh in 0..k {
                                for kw in 0..k {
                                    let iy = (oy * g.stride + kh) as isize - g.pad as isize;
                                    let ix = (ox * g.stride + kw) as isize - g.pad as isize;
                                    if iy < 0 || ix < 0 || iy >= fh as isize || ix >= fw as isize {
                                        continue;
                                    }
                                    acc += w.data()[((o * cf + i) * k + kh) * k + kw]
                                        * x.data()[((b * cf + i) * fh + iy as usize) * fw + ix as usize];
                                }
                            }
                        }
                        out[((b * co + o) * ch + oy) * cw + ox] = acc;
                    }
                }
            }
        }
        out
    }

    fn ramp(shape: &[usize], phase: f64) -> Array<f64> {
        let n: usize = shape.iter().product();
        Array::new(shape, (0..n).map(|i| ((i as f64) * 0.37 + phase).sin()).collect()).unwrap()
    }

    #[test]
    fn conv_matches_direct_loops() {
        let g = ConvGeom::conv((7, 6), 3, 2, 1).unwrap();
        assert_eq!(g.coarse, (4, 3));
        let x = ramp(&[2, 3, 7, 6], 0.1);
        let w = ramp(&[4, 3, 3, 3], 0.7);
        let got = conv_forward(&x, &w, &g).unwrap();
        let want = direct_conv(&x, &w, &g);
        for (a, b) in got.data().iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn transpose_is_adjoint_of_conv() {
        // <conv(x, w), y> == <x, conv_t(y, w)>
        let g = ConvGeom::deconv((4, 4), 4, 2, 1, (7, 7)).unwrap();
        let x = ramp(&[2, 3, 7, 7], 0.3);
        let w = ramp(&[5, 3, 4, 4], 1.1);
        let y = ramp(&[2, 5, 4, 4], 2.0);
        let cx = conv_forward(&x, &w, &g).unwrap();
        let ty = conv_transpose_forward(&y, &w, &g).unwrap();
        let lhs: f64 = cx.data().iter().zip(y.data()).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.data().iter().zip(ty.data()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
        // <conv(x, w), y> == <w, conv_weight(x, y)>
        let wg = conv_weight_forward(&x, &y, &g).unwrap();
        let rhs2: f64 = w.data().iter().zip(wg.data()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs2).abs() < 1e-9);
    }

    #[test]
    fn deconv_output_sizes() {
        let w = Var::<f64>::constant(Array::zeros(&[8, 4, 4, 4]));
        let x = Var::<f64>::constant(Array::zeros(&[1, 8, 7, 7]));
        let g = ConvGeom::deconv((7, 7), 4, 2, 1, (14, 14)).unwrap();
        assert_eq!(x.conv_transpose2d(&w, g).unwrap().shape(), &[1, 4, 14, 14]);
    }

    #[test]
    fn channel_mismatch_is_an_error() {
        let g = ConvGeom::conv((5, 5), 3, 1, 1).unwrap();
        let x = Var::<f64>::constant(Array::zeros(&[1, 2, 5, 5]));
        let w = Var::<f64>::constant(Array::zeros(&[4, 3, 3, 3]));
        assert!(x.conv2d(&w, g).is_err());
    }
}
