mod conv;
mod elementwise;
mod pool;
mod shape;

pub use conv::ConvGeom;
pub use pool::PlaneMap;
pub use shape::broadcast_shape;
