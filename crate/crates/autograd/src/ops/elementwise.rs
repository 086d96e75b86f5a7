use crate::error::{Error, Result};
use crate::scalar::Float;
use crate::var::{Backward, Var};

use super::shape::broadcast_shape;

struct Add;
struct Sub;
struct Mul;
struct Scale(f64);
struct Shift;
struct Exp;
struct Log;
struct Recip;
struct Sqrt;
struct Sigmoid;
struct Square;
struct LeakyRelu(f64);

impl<T: Float> Backward<T> for Add {
    fn backward(&self, _: &[Var<T>], _: &Var<T>, g: &Var<T>) -> Result<Vec<Option<Var<T>>>> {
        Ok(vec![Some(g.clone()), Some(g.clone())])
    }
}

impl<T: Float> Backward<T> for Sub {
    fn backward(&self, _: &[Var<T>], _: &Var<T>, g: &Var<T>) -> Result<Vec<Option<Var<T>>>> {
        Ok(vec![Some(g.clone()), Some(g.neg())])
    }
}

impl<T: Float> Backward<T> for Mul {
    fn backward(&self, x: &[Var<T>], _: &Var<T>, g: &Var<T>) -> Result<Vec<Option<Var<T>>>> {
        let ga = x[0].requires_grad().then(|| g.mul(&x[1])).transpose()?;
        let gb = x[1].requires_grad().then(|| g.mul(&x[0])).transpose()?;
        Ok(vec![ga, gb])
    }
}

impl<T: Float> Backward<T> for Scale {
    fn backward(&self, _: &[Var<T>], _: &Var<T>, g: &Var<T>) -> Result<Vec<Option<Var<T>>>> {
        Ok(vec![Some(g.scale(self.0))])
    }
}

impl<T: Float> Backward<T> for Shift {
    fn backward(&self, _: &[Var<T>], _: &Var<T>, g: &Var<T>) -> Result<Vec<Option<Var<T>>>> {
        Ok(vec![Some(g.clone())])
    }
}

impl<T: Float> Backward<T> for Exp {
    fn backward(&self, _: &[Var<T>], out: &Var<T>, g: &Var<T>) -> Result<Vec<Option<Var<T>>>> {
        Ok(vec![Some(g.mul(out)?)])
    }
}

impl<T: Float> Backward<T> for Log {
    fn backward(&self, x: &[Var<T>], _: &Var<T>, g: &Var<T>) -> Result<Vec<Option<Var<T>>>> {
        Ok(vec![Some(g.mul(&x[0].recip())?)])
    }
}

impl<T: Float> Backward<T> for Recip {
    fn backward(&self, _: &[Var<T>], out: &Var<T>, g: &Var<T>) -> Result<Vec<Option<Var<T>>>> {
        Ok(vec![Some(g.mul(&out.square())?.neg())])
    }
}

impl<T: Float> Backward<T> for Sqrt {
    fn backward(&self, _: &[Var<T>], out: &Var<T>, g: &Var<T>) -> Result<Vec<Option<Var<T>>>> {
        Ok(vec![Some(g.mul(&out.recip())?.scale(0.5))])
    }
}

impl<T: Float> Backward<T> for Sigmoid {
    fn backward(&self, _: &[Var<T>], out: &Var<T>, g: &Var<T>) -> Result<Vec<Option<Var<T>>>> {
        let slope = out.mul(&out.neg().shift(1.0))?;
        Ok(vec![Some(g.mul(&slope)?)])
    }
}

impl<T: Float> Backward<T> for Square {
    fn backward(&self, x: &[Var<T>], _: &Var<T>, g: &Var<T>) -> Result<Vec<Option<Var<T>>>> {
        Ok(vec![Some(g.mul(&x[0])?.scale(2.0))])
    }
}

impl<T: Float> Backward<T> for LeakyRelu {
    fn backward(&self, x: &[Var<T>], _: &Var<T>, g: &Var<T>) -> Result<Vec<Option<Var<T>>>> {
        let slope = T::from_f64_lossy(self.0);
        let mask = x[0]
            .value()
            .map(|v| if v >= T::zero() { T::one() } else { slope });
        Ok(vec![Some(g.mul(&Var::constant(mask))?)])
    }
}

impl<T: Float> Var<T> {
    fn binary(
        &self,
        other: &Var<T>,
        op: &'static str,
        f: impl Fn(T, T) -> T,
        rule: impl Backward<T> + 'static,
    ) -> Result<Var<T>> {
        if self.shape() != other.shape() {
            let shape = broadcast_shape(self.shape(), other.shape()).ok_or_else(|| {
                Error::ShapeMismatch {
                    op,
                    lhs: self.shape().to_vec(),
                    rhs: other.shape().to_vec(),
                }
            })?;
            let a = self.broadcast_to(&shape)?;
            let b = other.broadcast_to(&shape)?;
            return a.binary(&b, op, f, rule);
        }
        let value = self.value().zip_map(other.value(), f)?;
        Ok(Var::from_op(value, vec![self.clone(), other.clone()], rule))
    }

    fn unary(&self, f: impl Fn(T) -> T, rule: impl Backward<T> + 'static) -> Var<T> {
        Var::from_op(self.value().map(f), vec![self.clone()], rule)
    }

    /// Elementwise sum; shapes broadcast numpy-style.
    pub fn add(&self, other: &Var<T>) -> Result<Var<T>> {
        self.binary(other, "add", |a, b| a + b, Add)
    }

    pub fn sub(&self, other: &Var<T>) -> Result<Var<T>> {
        self.binary(other, "sub", |a, b| a - b, Sub)
    }

    pub fn mul(&self, other: &Var<T>) -> Result<Var<T>> {
        self.binary(other, "mul", |a, b| a * b, Mul)
    }

    pub fn div(&self, other: &Var<T>) -> Result<Var<T>> {
        self.mul(&other.recip())
    }

    pub fn neg(&self) -> Var<T> {
        self.scale(-1.0)
    }

    pub fn scale(&self, factor: f64) -> Var<T> {
        let c = T::from_f64_lossy(factor);
        self.unary(move |v| v * c, Scale(factor))
    }

    /// Adds a constant to every element.
    pub fn shift(&self, offset: f64) -> Var<T> {
        let c = T::from_f64_lossy(offset);
        self.unary(move |v| v + c, Shift)
    }

    pub fn exp(&self) -> Var<T> {
        self.unary(T::exp, Exp)
    }

    pub fn ln(&self) -> Var<T> {
        self.unary(T::ln, Log)
    }

    pub fn recip(&self) -> Var<T> {
        self.unary(T::recip, Recip)
    }

    pub fn sqrt(&self) -> Var<T> {
        self.unary(T::sqrt, Sqrt)
    }

    pub fn square(&self) -> Var<T> {
        self.unary(|v| v * v, Square)
    }

    pub fn sigmoid(&self) -> Var<T> {
        self.unary(
            |v| {
                if v >= T::zero() {
                    T::one() / (T::one() + (-v).exp())
                } else {
                    let e = v.exp();
                    e / (T::one() + e)
                }
            },
            Sigmoid,
        )
    }

    /// `x` for `x >= 0`, `slope * x` otherwise.
    pub fn leaky_relu(&self, slope: f64) -> Var<T> {
        let s = T::from_f64_lossy(slope);
        self.unary(move |v| if v >= T::zero() { v } else { v * s }, LeakyRelu(slope))
    }
}

#[cfg(test)]
mod tests {
    use crate::array::Array;
    use super::*;
    use crate::var::{backward, grad};

    fn leaf(shape: &[usize], data: &[f64]) -> Var<f64> {
        Var::leaf(Array::from_f64(shape, data).unwrap())
    }

    #[test]
    fn leaky_relu_values() {
        let x = leaf(&[3], &[1.0, -1.0, 0.0]);
        assert_eq!(x.leaky_relu(0.2).value().data(), &[1.0, -0.2, 0.0]);
    }

    #[test]
    fn product_rule_and_broadcast_gradient() {
        let a = leaf(&[2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let b = leaf(&[1, 2], &[10.0, 20.0]);
        let loss = a.mul(&b).unwrap().sum();
        let g = backward(&loss).unwrap();
        assert_eq!(g.get(&a).unwrap().data(), &[10.0, 20.0, 10.0, 20.0]);
        assert_eq!(g.get(&b).unwrap().data(), &[4.0, 6.0]);
    }

    #[test]
    fn second_derivative_of_cube() {
        // f = x^3 via x * x^2; f'' = 6x
        let x = leaf(&[], &[1.5]);
        let f = x.mul(&x.square()).unwrap();
        let d1 = grad(&f, &[&x], true).unwrap().remove(0);
        assert!((d1.item() - 3.0 * 1.5 * 1.5).abs() < 1e-12);
        let d2 = grad(&d1, &[&x], false).unwrap().remove(0);
        assert!((d2.item() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        let x = leaf(&[2], &[-800.0, 800.0]);
        let y = x.sigmoid();
        assert_eq!(y.value().data(), &[0.0, 1.0]);
    }
}
