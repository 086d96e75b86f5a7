//! Reverse-mode automatic differentiation over dense `f32`/`f64` arrays.
//!
//! Every derivative rule is itself written with differentiable operations,
//! so [`grad`] with `create_graph = true` yields gradients that can be
//! differentiated again (needed for gradient-norm penalties).
//!
//! ```
//! use autograd::{grad, Array, Var};
//!
//! let x = Var::<f64>::leaf(Array::scalar(3.0));
//! let y = x.square();
//! let dy = grad(&y, &[&x], true).unwrap().remove(0);
//! let d2y = grad(&dy, &[&x], false).unwrap().remove(0);
//! assert_eq!((dy.item(), d2y.item()), (6.0, 2.0));
//! ```

mod array;
mod error;
mod ops;
mod scalar;
mod var;

pub use array::{numel, Array};
pub use error::{Error, Result};
pub use ops::{broadcast_shape, ConvGeom, PlaneMap};
pub use scalar::Float;
pub use var::{backward, grad, grad_enabled, no_grad, with_grad_mode, Gradients, Var};
