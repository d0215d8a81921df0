//! Reverse-mode gradients of a one-layer softmax classifier, checked
//! against central finite differences.
//!
//! ```text
//! cargo run --example gradient_check
//! ```

use regtext::gradcore::{Graph, Tensor};

fn loss(w: &Tensor<f64>, x: &Tensor<f64>, labels: &[usize]) -> regtext::Result<(f64, Vec<f64>)> {
    let mut g = Graph::new();
    let w = g.param(0, w);
    let x = g.input(x.clone());
    let h = g.matmul(x, w)?;
    let h = g.tanh(h);
    let ce = g.cross_entropy(h, labels)?;
    g.backward(ce)?;
    let grad = g.grad(w).map(<[f64]>::to_vec).unwrap_or_default();
    Ok((g.scalar(ce), grad))
}

fn main() -> regtext::Result<()> {
    let x = Tensor::from_f64([2, 3], &[0.5, -1.0, 2.0, 0.1, 0.3, -0.7])?;
    let w = Tensor::from_f64(
        [3, 4],
        &[0.2, -0.4, 0.1, 0.9, -0.3, 0.8, 0.5, -0.2, 0.7, 0.0, -0.6, 0.4],
    )?
    .with_grad();
    let labels = [1, 3];

    let (value, analytic) = loss(&w, &x, &labels)?;
    println!("loss {value:.6}");
    println!("{:>5} {:>12} {:>12} {:>10}", "w_i", "analytic", "numeric", "rel err");
    let h = 1e-5;
    for (i, &a) in analytic.iter().enumerate() {
        let mut plus = w.detached();
        plus.data_mut()[i] += h;
        let mut minus = w.detached();
        minus.data_mut()[i] -= h;
        let numeric = (loss(&plus, &x, &labels)?.0 - loss(&minus, &x, &labels)?.0) / (2.0 * h);
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        println!("{i:>5} {a:>12.8} {numeric:>12.8} {err:>10.2e}");
    }
    Ok(())
}
