//! Small dense tensors and a reverse-mode tape.

mod tape;
mod tensor;

pub use tape::{Gradients, Reduction, Tape, Var};
pub use tensor::{Axis, Tensor};
