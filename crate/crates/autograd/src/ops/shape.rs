use crate::array::{numel, Array};
use crate::error::{Error, Result};
use crate::scalar::Float;
use crate::var::{Backward, Var};

/// Numpy-style broadcast of two shapes, `None` when incompatible.
pub fn broadcast_shape(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0; rank];
    for i in 0..rank {
        let da = if i + a.len() >= rank { a[i + a.len() - rank] } else { 1 };
        let db = if i + b.len() >= rank { b[i + b.len() - rank] } else { 1 };
        out[i] = match (da, db) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => return None,
        };
    }
    Some(out)
}

/// Per-target-axis strides into the (left-padded) source; 0 on broadcast axes.
fn source_strides(src: &[usize], target: &[usize]) -> Option<Vec<usize>> {
    if src.len() > target.len() {
        return None;
    }
    let pad = target.len() - src.len();
    let mut strides = vec![0; target.len()];
    let mut acc = 1;
    for i in (0..target.len()).rev() {
        let d = if i >= pad { src[i - pad] } else { 1 };
        if d == target[i] {
            strides[i] = if d == 1 { 0 } else { acc };
        } else if d == 1 {
            strides[i] = 0;
        } else {
            return None;
        }
        acc *= d;
    }
    Some(strides)
}

/// Visits every target index in row-major order together with its source
/// offset. The innermost axis is handled as a run for speed.
fn for_each_offset(target: &[usize], strides: &[usize], mut f: impl FnMut(usize, usize, usize)) {
    let total = numel(target);
    if total == 0 {
        return;
    }
    if target.is_empty() {
        f(0, 0, 0);
        return;
    }
    let last = target.len() - 1;
    let run = target[last];
    let run_stride = strides[last];
    let mut idx = vec![0usize; target.len()];
    let mut out = 0;
    while out < total {
        let base: usize = idx.iter().zip(strides).map(|(i, s)| i * s).sum();
        for j in 0..run {
            f(out + j, base + j * run_stride, j);
        }
        out += run;
        // odometer over the outer axes
        let mut axis = last;
        while axis > 0 {
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < target[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
}

fn broadcast_array<T: Float>(x: &Array<T>, target: &[usize]) -> Result<Array<T>> {
    let strides = source_strides(x.shape(), target).ok_or_else(|| Error::ShapeMismatch {
        op: "broadcast_to",
        lhs: x.shape().to_vec(),
        rhs: target.to_vec(),
    })?;
    let src = x.data();
    let mut out = vec![T::zero(); numel(target)];
    for_each_offset(target, &strides, |o, s, _| out[o] = src[s]);
    Array::new(target, out)
}

fn sum_to_array<T: Float>(x: &Array<T>, target: &[usize]) -> Result<Array<T>> {
    let strides = source_strides(target, x.shape()).ok_or_else(|| Error::ShapeMismatch {
        op: "sum_to",
        lhs: x.shape().to_vec(),
        rhs: target.to_vec(),
    })?;
    let src = x.data();
    let mut out = vec![T::zero(); numel(target)];
    for_each_offset(x.shape(), &strides, |o, s, _| out[s] += src[o]);
    Array::new(target, out)
}

struct BroadcastTo;
struct SumTo;
struct Reshape;
struct SumAll;
struct MatMul {
    trans_a: bool,
    trans_b: bool,
}

impl<T: Float> Backward<T> for BroadcastTo {
    fn backward(&self, x: &[Var<T>], _: &Var<T>, g: &Var<T>) -> Result<Vec<Option<Var<T>>>> {
        Ok(vec![Some(g.sum_to(x[0].shape())?)])
    }
}

impl<T: Float> Backward<T> for SumTo {
    fn backward(&self, x: &[Var<T>], _: &Var<T>, g: &Var<T>) -> Result<Vec<Option<Var<T>>>> {
        Ok(vec![Some(g.broadcast_to(x[0].shape())?)])
    }
}

impl<T: Float> Backward<T> for Reshape {
    fn backward(&self, x: &[Var<T>], _: &Var<T>, g: &Var<T>) -> Result<Vec<Option<Var<T>>>> {
        Ok(vec![Some(g.reshape(x[0].shape())?)])
    }
}

impl<T: Float> Backward<T> for SumAll {
    fn backward(&self, x: &[Var<T>], _: &Var<T>, g: &Var<T>) -> Result<Vec<Option<Var<T>>>> {
        Ok(vec![Some(g.broadcast_to(x[0].shape())?)])
    }
}

impl<T: Float> Backward<T> for MatMul {
    fn backward(&self, x: &[Var<T>], _: &Var<T>, g: &Var<T>) -> Result<Vec<Option<Var<T>>>> {
        let (a, b) = (&x[0], &x[1]);
        let (ga, gb) = match (self.trans_a, self.trans_b) {
            (false, false) => (g.matmul_t(b, false, true), a.matmul_t(g, true, false)),
            (false, true) => (g.matmul_t(b, false, false), g.matmul_t(a, true, false)),
            (true, false) => (b.matmul_t(g, false, true), a.matmul_t(g, false, false)),
            (true, true) => (b.matmul_t(g, true, true), g.matmul_t(a, true, true)),
        };
        Ok(vec![
            if a.requires_grad() { Some(ga?) } else { None },
            if b.requires_grad() { Some(gb?) } else { None },
        ])
    }
}

impl<T: Float> Var<T> {
    /// Repeats size-1 (or missing leading) axes up to `shape`.
    pub fn broadcast_to(&self, shape: &[usize]) -> Result<Var<T>> {
        if self.shape() == shape {
            return Ok(self.clone());
        }
        let value = broadcast_array(self.value(), shape)?;
        Ok(Var::from_op(value, vec![self.clone()], BroadcastTo))
    }

    /// Sums over axes so the result has `shape`; the adjoint of `broadcast_to`.
    pub fn sum_to(&self, shape: &[usize]) -> Result<Var<T>> {
        if self.shape() == shape {
            return Ok(self.clone());
        }
        let value = sum_to_array(self.value(), shape)?;
        Ok(Var::from_op(value, vec![self.clone()], SumTo))
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Var<T>> {
        if self.shape() == shape {
            return Ok(self.clone());
        }
        let value = self.value().clone().reshape(shape)?;
        Ok(Var::from_op(value, vec![self.clone()], Reshape))
    }

    /// Sum of all elements as a rank-0 value.
    pub fn sum(&self) -> Var<T> {
        let total = self.value().sum();
        Var::from_op(Array::scalar(total), vec![self.clone()], SumAll)
    }

    pub fn mean(&self) -> Var<T> {
        let n = self.value().len().max(1);
        self.sum().scale(1.0 / n as f64)
    }

    /// Matrix product of two rank-2 values.
    pub fn matmul(&self, other: &Var<T>) -> Result<Var<T>> {
        self.matmul_t(other, false, false)
    }

    /// `op(self) · op(other)` where `op` optionally transposes.
    pub fn matmul_t(&self, other: &Var<T>, trans_a: bool, trans_b: bool) -> Result<Var<T>> {
        let (sa, sb) = (self.shape(), other.shape());
        if sa.len() != 2 || sb.len() != 2 {
            return Err(Error::InvalidShape {
                op: "matmul",
                shape: if sa.len() != 2 { sa.to_vec() } else { sb.to_vec() },
                reason: "operands must be rank 2".into(),
            });
        }
        let (m, ka) = if trans_a { (sa[1], sa[0]) } else { (sa[0], sa[1]) };
        let (kb, n) = if trans_b { (sb[1], sb[0]) } else { (sb[0], sb[1]) };
        if ka != kb {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                lhs: sa.to_vec(),
                rhs: sb.to_vec(),
            });
        }
        let mut out = vec![T::zero(); m * n];
        T::gemm(
            m,
            ka,
            n,
            self.value().data(),
            trans_a,
            other.value().data(),
            trans_b,
            &mut out,
            false,
        );
        Ok(Var::from_op(
            Array::new(&[m, n], out)?,
            vec![self.clone(), other.clone()],
            MatMul { trans_a, trans_b },
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::var::backward;

    #[test]
    fn broadcast_shapes() {
        assert_eq!(broadcast_shape(&[2, 1, 3], &[4, 1]), Some(vec![2, 4, 3]));
        assert_eq!(broadcast_shape(&[2], &[3]), None);
        assert_eq!(broadcast_shape(&[], &[5]), Some(vec![5]));
    }

    #[test]
    fn broadcast_then_sum_round_trip() {
        let x = Var::<f64>::leaf(Array::from_f64(&[2, 1], &[1.0, 2.0]).unwrap());
        let y = x.broadcast_to(&[3, 2, 4]).unwrap();
        assert_eq!(y.value().sum(), 3.0 * 4.0 * 3.0);
        let s = y.sum_to(&[2, 1]).unwrap();
        assert_eq!(s.value().data(), &[12.0, 24.0]);
        let g = backward(&y.sum()).unwrap();
        assert_eq!(g.get(&x).unwrap().data(), &[12.0, 12.0]);
    }

    #[test]
    fn matmul_rejects_mismatch() {
        let a = Var::<f64>::constant(Array::zeros(&[2, 3]));
        let b = Var::<f64>::constant(Array::zeros(&[2, 3]));
        assert!(a.matmul(&b).is_err());
        assert!(a.matmul_t(&b, false, true).is_ok());
    }
}
