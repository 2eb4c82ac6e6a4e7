//! Reverse-mode gradient of a small two-layer network, checked against
//! central differences.

use cellfree_gnn::numerics::{Tape, Tensor};

fn loss(w1: &Tensor, w2: &Tensor, x: &Tensor) -> cellfree_gnn::Result<(f64, Tensor, Tensor)> {
    let mut tape = Tape::new();
    let (a, b) = (tape.param(w1.clone()), tape.param(w2.clone()));
    let input = tape.constant(x.clone());
    let h = tape.matmul(input, a)?;
    let h = tape.relu(h)?;
    let y = tape.matmul(h, b)?;
    let y = tape.square(y)?;
    let out = tape.sum_all(y)?;
    let grads = tape.backward(out)?;
    Ok((
        tape.value(out).item().unwrap_or(f64::NAN),
        grads.wrt(a),
        grads.wrt(b),
    ))
}

fn main() -> cellfree_gnn::Result<()> {
    let x = Tensor::from_rows(&[vec![0.5, -1.0, 2.0], vec![1.5, 0.3, -0.7]])?;
    let w1 = Tensor::from_fn(3, 4, |i, j| ((i * 4 + j) as f64 * 0.37).sin());
    let w2 = Tensor::from_fn(4, 1, |i, _| 0.2 * i as f64 - 0.3);
    let (value, g1, _) = loss(&w1, &w2, &x)?;
    println!("loss {value:.6}");

    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..4 {
            let (mut up, mut down) = (w1.clone(), w1.clone());
            up.set(i, j, w1.get(i, j) + h);
            down.set(i, j, w1.get(i, j) - h);
            let fd = (loss(&up, &w2, &x)?.0 - loss(&down, &w2, &x)?.0) / (2.0 * h);
            worst = worst.max((fd - g1.get(i, j)).abs());
        }
    }
    println!("max |analytic - finite difference| over W1: {worst:.2e}");
    Ok(())
}
