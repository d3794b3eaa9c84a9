use crate::nn::{Gradients, MlpModel};
use crate::tensor::Tensor;

/// Central differences `(f(x + ε) − f(x − ε)) / 2ε` per coordinate.
pub fn central_difference<F>(mut f: F, point: &[f64], eps: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut x = point.to_vec();
    (0..point.len())
        .map(|i| {
            x[i] = point[i] + eps;
            let plus = f(&x);
            x[i] = point[i] - eps;
            let minus = f(&x);
            x[i] = point[i];
            (plus - minus) / (2.0 * eps)
        })
        .collect()
}

/// Numerical gradient of `loss` with respect to every parameter of `model`.
pub fn finite_difference_gradient<F>(model: &MlpModel, loss: F, eps: f64) -> Gradients
where
    F: Fn(&MlpModel) -> f64,
{
    assert!(eps > 0.0, "finite-difference step must be positive");
    let mut probe = model.clone();
    let flat = central_difference(
        |theta| {
            probe.set_flat_params(theta).expect("length preserved");
            loss(&probe)
        },
        &model.flat_params(),
        eps,
    );
    let mut offset = 0;
    model
        .params()
        .iter()
        .map(|p| {
            let n = p.len();
            let t = Tensor::new(p.shape().to_vec(), flat[offset..offset + n].to_vec())
                .expect("shape preserved");
            offset += n;
            t
        })
        .collect()
}

/// Largest coordinate-wise relative error `|a − b| / max(|a|, |b|, floor)`.
///
/// The floor keeps near-zero coordinates from dominating through pure
/// rounding noise; with `floor = 1e-4` a coordinate passes a `1e-5`
/// threshold only if its absolute error is below `1e-9`.
pub fn max_relative_error(a: &[Tensor], b: &[Tensor], floor: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.data().iter().zip(y.data()))
        .map(|(&x, &y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}
